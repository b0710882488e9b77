#!/usr/bin/env python3
"""Run the median-regression study and print error against n per mechanism.

    python scripts/run_quantile.py --seed 0 --tau 0.5 --out quantile.csv
"""

import argparse
import time

from kng.simulation import quantile_config, run_quantile_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tau", type=float, default=0.5)
    ap.add_argument("--replicates", type=int, default=20)
    ap.add_argument("--mcmc-steps", type=int, default=1000)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="quantile.csv")
    args = ap.parse_args()

    cfg = quantile_config(base_seed=args.seed, tau=args.tau, replicates=args.replicates,
                          mcmc_steps=args.mcmc_steps)
    start = time.perf_counter()
    result = run_quantile_experiment(cfg, jobs=args.jobs)
    result.to_csv(args.out)
    print(f"{'mechanism':<14}" + "".join(f"{n:>10}" for n in cfg.n_grid))
    for mech in cfg.mechanisms:
        cells = [result.row(mech, n)["log10_mean_error"] for n in cfg.n_grid]
        print(f"{mech:<14}" + "".join(f"{c:>10.3f}" for c in cells))
    print(f"log10 mean error; wrote {args.out} in {time.perf_counter() - start:.1f} s")


if __name__ == "__main__":
    main()
