"""Regression simulations comparing the mechanisms against the non-private fit.

Each replicate draws a design with an intercept column and U(-1, 1)
covariates, Gaussian errors, and rescales the responses by ``R = max |Y|``.
Every estimator is fitted on the rescaled data and multiplied back by ``R``;
the reported error is the Euclidean distance to the true coefficients.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .mechanisms import (
    MechanismConfig,
    PrivacyBudget,
    exponential_batch,
    kng_batch,
    objective_perturbation,
)
from .objectives import Dataset, LinearSSE, QuantileLoss
from .optimizer import ols, quantile_regression_lp
from .sampler import SamplerConfig

logger = logging.getLogger(__name__)

NON_PRIVATE = "non-private"
EXPONENTIAL = "exponential"
KNG = "kng"
OBJECTIVE_PERTURBATION = "objective-perturbation"
ALL_MECHANISMS = (NON_PRIVATE, EXPONENTIAL, KNG, OBJECTIVE_PERTURBATION)

CSV_HEADER = ("mechanism", "n", "mean_error", "log10_mean_error", "mc_se", "replicates", "excluded")

# (0, -1, -1 + 2/11, ..., 1 - 2/11)
LINEAR_THETA = tuple([0.0] + [-1.0 + 2.0 * k / 11.0 for k in range(11)])
QUANTILE_THETA = (0.0, -1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    true_theta: tuple
    n_grid: tuple
    replicates: int = 20
    epsilon: float = 1.0
    mcmc_steps: int = 10000
    tau: float | None = None
    base_seed: int = 0
    mechanisms: tuple = ALL_MECHANISMS
    B: float = 1.0
    proposal_width: float | None = None
    noise_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "true_theta", tuple(float(v) for v in self.true_theta))
        object.__setattr__(self, "n_grid", tuple(int(v) for v in self.n_grid))
        object.__setattr__(self, "mechanisms", tuple(self.mechanisms))
        if not self.true_theta:
            raise ValueError("true_theta is empty")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ValueError("n_grid needs positive sample sizes")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ValueError("replicates must be a positive integer")
        PrivacyBudget(self.epsilon)
        if self.mcmc_steps < 1:
            raise ValueError("mcmc_steps must be at least 1")
        unknown = set(self.mechanisms) - set(ALL_MECHANISMS)
        if unknown or not self.mechanisms:
            raise ValueError(f"unknown mechanisms {sorted(unknown)}; choose from {ALL_MECHANISMS}")
        if len(set(self.mechanisms)) != len(self.mechanisms):
            raise ValueError("mechanisms listed twice")
        if self.tau is not None and not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be nonnegative")

    @property
    def dim(self):
        return len(self.true_theta)


def linear_config(**overrides):
    """Desk-scale version of the linear-regression study (d = 12)."""
    base = dict(
        true_theta=LINEAR_THETA,
        n_grid=(10**2, 10**3, 10**4, 10**5),
        replicates=20,
        epsilon=1.0,
        mcmc_steps=10000,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def quantile_config(**overrides):
    """Desk-scale version of the median-regression study (d = 2, tau = 1/2)."""
    base = dict(
        true_theta=QUANTILE_THETA,
        n_grid=(10, 10**2, 10**3, 10**4, 10**5),
        replicates=20,
        epsilon=1.0,
        mcmc_steps=1000,
        tau=0.5,
        mechanisms=(NON_PRIVATE, EXPONENTIAL, KNG),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


@dataclass
class RegressionData:
    X: np.ndarray
    Y: np.ndarray
    R: float
    Y_scaled: np.ndarray


def generate_regression_data(n, d, true_theta, rng, noise_scale=1.0):
    """Intercept plus U(-1, 1) covariates, ``Y = X theta + e``, ``Y' = Y / max|Y|``.

    ``noise_scale`` multiplies the N(0, 1) errors (0 gives noise-free data).
    An all-zero response vector leaves ``R = 1``.
    """
    true_theta = np.asarray(true_theta, dtype=float)
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    if true_theta.shape != (d,):
        raise ValueError(f"true_theta has shape {true_theta.shape}, expected ({d},)")
    X = np.empty((n, d))
    X[:, 0] = 1.0
    X[:, 1:] = rng.uniform(-1.0, 1.0, size=(n, d - 1))
    e = rng.standard_normal(n)
    Y = X @ true_theta + noise_scale * e
    R = float(np.abs(Y).max())
    if R == 0.0:
        R = 1.0
    return RegressionData(X, Y, R, Y / R)


@dataclass
class ExperimentResult:
    """Aggregated errors, one row per (mechanism, n).

    ``errors[(mechanism, n)]`` keeps the per-replicate distances, with nan
    for excluded replicates.
    """

    rows: list
    errors: dict = field(default_factory=dict, repr=False)

    def row(self, mechanism, n):
        for r in self.rows:
            if r["mechanism"] == mechanism and r["n"] == n:
                return r
        raise KeyError((mechanism, n))

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow([_fmt(r[k]) for k in CSV_HEADER])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _summarize(mechanism, n, errs):
    ok = errs[np.isfinite(errs)]
    k = ok.size
    if k:
        mean = float(ok.mean())
        if k > 1 and np.all(ok > 0):
            se = float(np.log10(ok).std(ddof=1) / math.sqrt(k))
        else:
            se = math.nan
        log_mean = math.log10(mean) if mean > 0 else -math.inf
    else:
        mean = log_mean = se = math.nan
    return {
        "mechanism": mechanism,
        "n": int(n),
        "mean_error": mean,
        "log10_mean_error": log_mean,
        "mc_se": se,
        "replicates": int(k),
        "excluded": int(errs.size - k),
    }


def _replicate_rngs(cfg, n, r):
    # one stream each for: data, KNG chain, exponential chain, objective perturbation
    ss = np.random.SeedSequence([cfg.base_seed + r, n])
    return [np.random.default_rng(s) for s in ss.spawn(4)]


def _run_point(cfg, n, problem):
    theta_star = np.asarray(cfg.true_theta)
    d = cfg.dim
    streams = [_replicate_rngs(cfg, n, r) for r in range(cfg.replicates)]
    sims = [generate_regression_data(n, d, theta_star, s[0], cfg.noise_scale) for s in streams]
    datasets = [Dataset(s.X, s.Y_scaled) for s in sims]
    scale = np.array([s.R for s in sims])

    if problem == "linear":
        objective = LinearSSE(B=cfg.B)
    else:
        objective = QuantileLoss(tau=cfg.tau, B=cfg.B, c_x=1.0)
    mcfg = MechanismConfig(
        PrivacyBudget(cfg.epsilon),
        SamplerConfig(steps=cfg.mcmc_steps, proposal_width=cfg.proposal_width),
    )

    def distances(estimates):
        errs = np.full(cfg.replicates, np.nan)
        for i, est in enumerate(estimates):
            if isinstance(est, Exception):
                logger.warning("n=%d replicate %d excluded: %s", n, i, est)
                continue
            theta = est if isinstance(est, np.ndarray) else est.theta
            errs[i] = np.linalg.norm(scale[i] * theta - theta_star)
        return errs

    out = {}
    for mech in cfg.mechanisms:
        if mech == NON_PRIVATE:
            fits = []
            for D in datasets:
                try:
                    if problem == "linear":
                        fits.append(ols(D.X, D.y))
                    else:
                        fits.append(quantile_regression_lp(D.X, D.y, cfg.tau))
                except Exception as exc:  # recorded as an exclusion
                    fits.append(exc)
            out[mech] = distances(fits)
        elif mech == KNG:
            out[mech] = distances(kng_batch(objective, datasets, mcfg, [s[1] for s in streams]))
        elif mech == EXPONENTIAL:
            out[mech] = distances(
                exponential_batch(objective, datasets, mcfg, [s[2] for s in streams])
            )
        elif mech == OBJECTIVE_PERTURBATION:
            fits = []
            for D, s in zip(datasets, streams):
                try:
                    fits.append(objective_perturbation(objective, D, mcfg, s[3]))
                except Exception as exc:
                    fits.append(exc)
            out[mech] = distances(fits)
    return n, out


def _run(cfg, problem, jobs):
    if jobs is not None and jobs > 1 and len(cfg.n_grid) > 1:
        from joblib import Parallel, delayed

        points = Parallel(n_jobs=jobs)(delayed(_run_point)(cfg, n, problem) for n in cfg.n_grid)
    else:
        points = [_run_point(cfg, n, problem) for n in cfg.n_grid]
    by_n = dict(points)
    rows, errors = [], {}
    for mech in cfg.mechanisms:
        for n in cfg.n_grid:
            errs = by_n[n][mech]
            errors[(mech, n)] = errs
            rows.append(_summarize(mech, n, errs))
    return ExperimentResult(rows, errors)


def run_linear_experiment(cfg, jobs=1):
    """Least-squares study: non-private OLS, exponential, KNG, objective perturbation."""
    return _run(cfg, "linear", jobs)


def run_quantile_experiment(cfg, jobs=1):
    """Quantile-regression study: non-private LP fit, exponential, KNG."""
    if cfg.tau is None:
        raise ValueError("quantile experiments need tau")
    if OBJECTIVE_PERTURBATION in cfg.mechanisms:
        raise ValueError(
            "objective perturbation cannot be used for quantile regression: "
            "the check loss is not strongly convex"
        )
    return _run(cfg, "quantile", jobs)


def with_mechanisms(cfg, mechanisms):
    return replace(cfg, mechanisms=tuple(mechanisms))
