"""Run a TOML sweep config and write the CSV.

    python scripts/run_sweep.py configs/staircase.toml -o staircase.csv
"""

import argparse
import sys
from pathlib import Path

from lcbc.cli import run

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config", type=Path)
    ap.add_argument("-o", "--out", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    argv = ["sweep", "--config", str(args.config), "--seed", str(args.seed)]
    if args.out:
        argv += ["--out", str(args.out)]
    sys.exit(run(argv))
