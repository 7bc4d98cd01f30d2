"""Converse certificate over many seeds: one row per instance with the chain
ranks and the implied bound."""

import argparse
import csv
import sys

from lcbc.analysis import converse_chain
from lcbc.galois import make_field
from lcbc.instance import sample_instance


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--K", type=int, default=5)
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--mp", type=int, default=3)
    ap.add_argument("--seeds", type=int, default=50)
    args = ap.parse_args()

    F = make_field(args.p, args.n)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["seed", "en_conv", "upsilon_ranks", "pi_ranks", "implied_bound"])
    for seed in range(args.seeds):
        cert = converse_chain(sample_instance(F, args.K, args.d, args.m, args.mp, seed))
        w.writerow([seed, cert.en_conv, ";".join(map(str, cert.upsilon_ranks)),
                    ";".join(map(str, cert.pi_ranks)), cert.implied_bound])


if __name__ == "__main__":
    main()
