#!/usr/bin/env python3
"""Compare rescaled KNG least-squares draws with their K-norm limit.

Prints the total-variation distance on a 10 x 10 grid (plus an overflow
cell).  Smaller ``--chains``/``--sweeps`` give a quick, noisier look.
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))

from test_acceptance import TV_MAX, criterion_6  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=6)
    ap.add_argument("--chains", type=int, default=10**4)
    ap.add_argument("--sweeps", type=int, default=10**4)
    args = ap.parse_args()
    start = time.perf_counter()
    ok, detail, _ = criterion_6(seed=args.seed, chains=args.chains, sweeps=args.sweeps)
    print(f"{'ok' if ok else 'above'} {TV_MAX}: {detail} ({time.perf_counter() - start:.1f} s)")


if __name__ == "__main__":
    main()
