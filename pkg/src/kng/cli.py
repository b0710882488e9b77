"""Command-line front end.

Exit codes: 0 on success, 1 on a runtime failure (bad data, a sampler or
solver that gives up, an unwritable path), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import simulation
from .domains import Interval
from .errors import BoundViolationError, EmptyDataError, OptimizationError, SamplingError
from .mechanisms import (
    MechanismConfig,
    exponential,
    kng,
    knorm_mean,
    objective_perturbation,
    private_quantile,
)
from .norms import NormKind
from .objectives import Dataset, GeometricMedian, LinearSSE, MeanSSE, QuantileLoss

OBJECTIVES = ("mean", "linear", "median", "quantile")
MECHANISMS = ("kng", "exponential", "knorm-mean", "objective-perturbation", "private-quantile")

# objectives each mechanism accepts
COMPATIBLE = {
    "kng": set(OBJECTIVES),
    "exponential": {"mean", "linear", "quantile"},
    "knorm-mean": {"mean"},
    "objective-perturbation": {"linear"},
    "private-quantile": {"quantile"},
}

INCOMPATIBLE_REASON = {
    ("objective-perturbation", "quantile"): (
        "the check loss is piecewise linear, not strongly convex or twice differentiable"
    ),
    ("objective-perturbation", "median"): "the sum of distances is not strongly convex",
    ("objective-perturbation", "mean"): "only the least-squares objective is supported",
    ("exponential", "median"): "the geometric-median loss has no declared value sensitivity",
}


class UsageError(Exception):
    pass


def _default_jobs():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("KNG_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"KNG_SEED must be an integer, got {env!r}") from None


def _int_list(text):
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _name_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_common(p):
    p.add_argument("-v", "--verbose", action="store_true", help="log sampler diagnostics")
    p.add_argument("--epsilon", type=float, default=1.0, help="privacy budget (default 1)")
    p.add_argument(
        "--seed", type=int, default=None,
        help="master seed (default: $KNG_SEED, else 0)",
    )
    p.add_argument(
        "--proposal-width", type=float, default=None,
        help="MCMC proposal half-width (default 5%% of the domain extent)",
    )
    p.add_argument("--bound-b", type=float, default=1.0, help="l1 radius B of the parameter ball (default 1)")


def _add_simulation(p, default_steps, default_grid, mechanisms):
    _add_common(p)
    p.add_argument(
        "--n-grid", type=_int_list, default=default_grid,
        help=f"comma-separated sample sizes (default {','.join(map(str, default_grid))})",
    )
    p.add_argument("--replicates", type=int, default=20, help="replicates per n (default 20)")
    p.add_argument(
        "--mcmc-steps", type=int, default=default_steps,
        help=f"Metropolis sweeps per draw (default {default_steps})",
    )
    p.add_argument(
        "--mechanisms", type=_name_list, default=list(mechanisms),
        help=f"comma-separated subset of {','.join(mechanisms)} (default: all)",
    )
    p.add_argument(
        "--jobs", type=int, default=None,
        help="worker processes across the n grid (default: available CPUs)",
    )
    p.add_argument("--out", default=None, help="output CSV path")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kng", description="K-norm gradient mechanism and competing private estimators"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    lin = sub.add_parser("simulate-linear", help="least-squares utility study")
    _add_simulation(lin, 10000, [10**2, 10**3, 10**4, 10**5], simulation.ALL_MECHANISMS)
    lin.set_defaults(func=cmd_simulate_linear)

    q = sub.add_parser("simulate-quantile", help="quantile-regression utility study")
    _add_simulation(
        q, 1000, [10, 10**2, 10**3, 10**4, 10**5],
        (simulation.NON_PRIVATE, simulation.EXPONENTIAL, simulation.KNG),
    )
    q.add_argument("--tau", type=float, default=0.5, help="quantile level in (0, 1) (default 0.5)")
    q.set_defaults(func=cmd_simulate_quantile)

    rel = sub.add_parser("release", help="one sanitized release from a CSV file")
    _add_common(rel)
    rel.add_argument("--data", required=True, help="CSV with header x1..xd[,y]")
    rel.add_argument("--objective", required=True, choices=OBJECTIVES)
    rel.add_argument("--mechanism", required=True, choices=MECHANISMS)
    rel.add_argument(
        "--radius-r", type=float, default=1.0,
        help="data radius r for mean and median; interval half-width for private-quantile (default 1)",
    )
    rel.add_argument("--tau", type=float, default=0.5, help="quantile level (default 0.5)")
    rel.add_argument("--cx", type=float, default=1.0, help="bound on ||x_i|| for quantile (default 1)")
    rel.add_argument(
        "--norm", choices=[k.value for k in NormKind], default=None,
        help="gradient norm (default: l2 for mean/median, linf for linear/quantile)",
    )
    rel.add_argument(
        "--paper-constants", action="store_true",
        help="use the published sensitivity constants instead of the conservative ones",
    )
    rel.add_argument("--mcmc-steps", type=int, default=1000, help="Metropolis sweeps (default 1000)")
    rel.set_defaults(func=cmd_release)
    return parser


# ---------------------------------------------------------------------------
# simulations


def _experiment_config(args, factory, **extra):
    try:
        return factory(
            n_grid=tuple(args.n_grid),
            replicates=args.replicates,
            epsilon=args.epsilon,
            mcmc_steps=args.mcmc_steps,
            base_seed=_seed(args),
            mechanisms=tuple(args.mechanisms),
            B=args.bound_b,
            proposal_width=args.proposal_width,
            **extra,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _simulate(args, run, cfg, default_out):
    jobs = _default_jobs() if args.jobs is None else args.jobs
    if jobs < 1:
        raise UsageError("--jobs must be at least 1")
    out = args.out or default_out
    start = time.perf_counter()
    result = run(cfg, jobs=jobs)
    result.to_csv(out)
    print(f"wrote {out} in {time.perf_counter() - start:.1f} s")
    return 0


def cmd_simulate_linear(args):
    cfg = _experiment_config(args, simulation.linear_config)
    return _simulate(args, simulation.run_linear_experiment, cfg, "linear.csv")


def cmd_simulate_quantile(args):
    if not 0 < args.tau < 1:
        raise UsageError("--tau must lie in (0, 1)")
    if simulation.OBJECTIVE_PERTURBATION in args.mechanisms:
        raise UsageError(
            "objective perturbation cannot be used for quantile regression: "
            "the check loss is not strongly convex"
        )
    cfg = _experiment_config(args, simulation.quantile_config, tau=args.tau)
    return _simulate(args, simulation.run_quantile_experiment, cfg, "quantile.csv")


# ---------------------------------------------------------------------------
# single release


def _objective(args):
    kw = {} if args.norm is None else {"norm": args.norm}
    if args.objective == "mean":
        return MeanSSE(r=args.radius_r, paper_constants=args.paper_constants, **kw)
    if args.objective == "linear":
        return LinearSSE(B=args.bound_b, **kw)
    if args.objective == "median":
        return GeometricMedian(r=args.radius_r, **kw)
    return QuantileLoss(
        tau=args.tau, B=args.bound_b, c_x=args.cx, paper_constants=args.paper_constants, **kw
    )


def cmd_release(args):
    if args.mechanism not in COMPATIBLE or args.objective not in COMPATIBLE[args.mechanism]:
        reason = INCOMPATIBLE_REASON.get((args.mechanism, args.objective), "unsupported pairing")
        raise UsageError(f"{args.mechanism} cannot be used with the {args.objective} objective: {reason}")
    if not 0 < args.tau < 1:
        raise UsageError("--tau must lie in (0, 1)")
    try:
        objective = _objective(args)
        cfg = MechanismConfig.make(
            args.epsilon, steps=args.mcmc_steps, seed=_seed(args), proposal_width=args.proposal_width
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    x_bound = args.radius_r if args.objective in ("mean", "median") else args.cx
    y_bound = args.radius_r if args.mechanism == "private-quantile" else 1.0
    data = Dataset.from_csv(args.data, x_bound=x_bound, y_bound=y_bound)
    rng = np.random.default_rng(cfg.sampler.seed)

    if args.mechanism == "kng":
        est = kng(objective, data, cfg)
    elif args.mechanism == "exponential":
        est = exponential(objective, data, cfg)
    elif args.mechanism == "knorm-mean":
        est = knorm_mean(data, objective.norm, args.radius_r, cfg.budget, rng)
    elif args.mechanism == "objective-perturbation":
        est = objective_perturbation(objective, data, cfg, rng)
    else:
        if data.y is not None:
            values = data.y
        elif data.d == 1:
            values = data.X[:, 0]
        else:
            raise UsageError("private-quantile needs a y column or a single x1 column")
        interval = Interval(-args.radius_r, args.radius_r)
        theta = private_quantile(
            values, args.tau, cfg.budget, interval, rng, paper_constants=args.paper_constants
        )
        est = np.array([theta])
    theta = est if isinstance(est, np.ndarray) else est.theta
    print(",".join(repr(float(v)) for v in np.atleast_1d(theta)))
    if not isinstance(est, np.ndarray):
        for key, value in est.diagnostics.items():
            logging.getLogger(__name__).info("%s = %s", key, value)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (BoundViolationError, EmptyDataError, SamplingError, OptimizationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
