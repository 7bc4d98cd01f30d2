"""IA scheme at desk scale: one CSV row per seeded instance with the E_n
outcome, broadcast length and simulated decoding count."""

import argparse
import csv
import sys
import time

from lcbc.galois import make_field
from lcbc.instance import sample_instance
from lcbc.schemes import build_ia, simulate_decoding


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--K", type=int, default=2)
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--mp", type=int, default=1)
    ap.add_argument("--N", type=int, default=1)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--trials", type=int, default=1000)
    args = ap.parse_args()

    F = make_field(args.p, args.n)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["seed", "en_holds", "eta", "etabar", "broadcast_len_p", "cost_q", "trials", "successes", "seconds"])
    for seed in range(args.seeds):
        t0 = time.perf_counter()
        inst = sample_instance(F, args.K, args.d, args.m, args.mp, seed)
        ia, scheme = build_ia(inst, args.N, seed=seed)
        rep = simulate_decoding(inst, scheme, trials=args.trials, seed=seed)
        w.writerow([seed, ia.en_holds, ia.eta, ia.etabar, scheme.broadcast_len_p,
                    float(scheme.cost_q), rep.trials, rep.successes, f"{time.perf_counter() - t0:.3f}"])


if __name__ == "__main__":
    main()
