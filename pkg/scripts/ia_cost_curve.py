"""IA cost formula against the extension degree n (integer arithmetic only),
next to the generic cost it approaches."""

import argparse
import csv
import sys

from lcbc.capacity import SymParams, delta_g
from lcbc.schemes import ia_cost_formula


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=int, default=2)
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--mp", type=int, default=1)
    ap.add_argument("--exponents", type=int, nargs="+", default=[6, 8, 10, 20, 40, 60, 100])
    args = ap.parse_args()

    target = delta_g(SymParams(args.K, args.d, args.m, args.mp))[0]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "N", "cost", "delta_g", "ratio"])
    for e in args.exponents:
        cost, N = ia_cost_formula(10**e, args.K, args.d, args.m, args.mp)
        w.writerow([f"1e{e}", N, f"{float(cost):.6g}", str(target), f"{float(cost / target):.6g}"])


if __name__ == "__main__":
    main()
