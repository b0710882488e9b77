"""Privacy mechanisms: KNG, exponential, K-norm mean, objective perturbation
and the exact private quantile sampler.

Each call spends the whole budget on one released estimate.  The ``*_batch``
variants run one independent MCMC chain per dataset in a single vectorized
pass; chain ``i`` uses only ``rngs[i]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domains import Interval
from .errors import (
    BoundViolationError,
    NonDifferentiablePointError,
    SamplingError,
    UnsupportedOperationError,
)
from .norms import KNormNoiseParams, NormKind, norm, sample_knorm_noise
from .objectives import LinearSSE, empirical_cdf
from .optimizer import projected_gradient
from .sampler import SamplerConfig, check_acceptance, run_chains

# shift applied to parameter rows that land exactly on a data point
COLLISION_SHIFT = 1e-12


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon!r}")


@dataclass(frozen=True)
class ObjectivePerturbationConfig:
    """Overrides for objective perturbation; ``None`` picks the default formula."""

    gamma: float | None = None
    noise_rate: float | None = None
    max_iters: int = 20000
    tol: float = 1e-12

    def __post_init__(self):
        if self.gamma is not None and self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.noise_rate is not None and not self.noise_rate > 0:
            raise ValueError("noise_rate must be positive")


@dataclass(frozen=True)
class MechanismConfig:
    budget: PrivacyBudget
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    objective_perturbation: ObjectivePerturbationConfig = field(
        default_factory=ObjectivePerturbationConfig
    )

    @classmethod
    def make(cls, epsilon, steps=1000, seed=0, proposal_width=None, **op):
        return cls(
            PrivacyBudget(epsilon),
            SamplerConfig(steps=steps, seed=seed, proposal_width=proposal_width),
            ObjectivePerturbationConfig(**op),
        )

    @property
    def epsilon(self):
        return self.budget.epsilon


@dataclass
class SanitizedEstimate:
    theta: np.ndarray
    mechanism: str
    diagnostics: dict = field(default_factory=dict)


def _epsilon(budget):
    return budget.epsilon if isinstance(budget, PrivacyBudget) else PrivacyBudget(budget).epsilon


# ---------------------------------------------------------------------------
# log densities (unnormalized, with respect to the uniform measure on the domain)


def _safe_gradient(gradient, theta):
    try:
        return gradient(theta)
    except NonDifferentiablePointError:
        return gradient(np.asarray(theta) + COLLISION_SHIFT)


def kng_log_density(objective, data, epsilon):
    """``theta -> -(eps / (2 Delta)) * ||grad l(theta; D)||``."""
    coef = epsilon / (2.0 * objective.gradient_sensitivity())
    kind = objective.norm

    def log_density(theta):
        return -coef * norm(_safe_gradient(lambda t: objective.gradient(data, t), theta), kind)

    return log_density


def exponential_log_density(objective, data, epsilon):
    """``theta -> -(eps / (2 Delta)) * l(theta; D)``."""
    coef = epsilon / (2.0 * objective.value_sensitivity(dim=data.d))

    def log_density(theta):
        return -coef * objective.value(data, theta)

    return log_density


def knorm_mean_log_density(data, kind, r, epsilon):
    """``theta -> -(n eps / (2 r)) * ||theta - mean||`` on all of R^d."""
    rate = data.n * epsilon / (2.0 * r)

    def log_density(theta):
        return -rate * norm(np.asarray(theta, dtype=float) - data.mean, kind)

    return log_density


# ---------------------------------------------------------------------------
# MCMC mechanisms


def _prepare(objective, datasets):
    datasets = list(datasets)
    if not datasets:
        raise ValueError("no datasets given")
    dims = {D.d for D in datasets}
    if len(dims) != 1:
        raise ValueError("datasets in a batch must share the dimension")
    for D in datasets:
        objective.check_data(D)
    return datasets, dims.pop()


def _sample(log_density, domain, cfg, rngs, tag):
    result = run_chains(log_density, domain, cfg.sampler, rngs)
    failed = check_acceptance(result, tag)
    out = []
    for i, bad in enumerate(failed):
        diag = {"mcmc_acceptance_rate": float(result.acceptance_rate[i])}
        if bad:
            out.append(SamplingError(f"{tag}: chain {i} rejected every proposal", diag))
        else:
            out.append(SanitizedEstimate(result.theta[i].copy(), tag, diag))
    return out


def kng_batch(objective, datasets, cfg, rngs):
    """One KNG draw per dataset.

    Returns a list whose entries are :class:`SanitizedEstimate` or, for
    chains that never moved, the :class:`SamplingError` describing them.
    """
    datasets, d = _prepare(objective, datasets)
    stack = objective.stack(datasets)
    coef = cfg.epsilon / (2.0 * objective.gradient_sensitivity())
    kind = objective.norm

    def log_density(thetas):
        return -coef * norm(_safe_gradient(stack.gradient, thetas), kind)

    return _sample(log_density, objective.domain(d), cfg, rngs, "kng")


def exponential_batch(objective, datasets, cfg, rngs):
    """One exponential-mechanism draw per dataset; see :func:`kng_batch`."""
    datasets, d = _prepare(objective, datasets)
    stack = objective.stack(datasets)
    coef = cfg.epsilon / (2.0 * objective.value_sensitivity(dim=d))

    def log_density(thetas):
        return -coef * stack.value(thetas)

    return _sample(log_density, objective.domain(d), cfg, rngs, "exponential")


def _single(results):
    (out,) = results
    if isinstance(out, Exception):
        raise out
    return out


def kng(objective, data, cfg):
    """Release one draw from the K-norm gradient mechanism.

    The density is proportional to ``exp(-eps ||grad l(theta; D)|| / (2 Delta))``
    with respect to the uniform measure on ``objective.domain(d)``, sampled
    by coordinate-wise Metropolis seeded from ``cfg.sampler.seed``.
    """
    rng = np.random.default_rng(cfg.sampler.seed)
    return _single(kng_batch(objective, [data], cfg, [rng]))


def exponential(objective, data, cfg):
    """Release one draw from the exponential mechanism with score ``l(theta; D)``."""
    rng = np.random.default_rng(cfg.sampler.seed)
    return _single(exponential_batch(objective, [data], cfg, [rng]))


# ---------------------------------------------------------------------------
# exact mechanisms


def knorm_mean(data, kind, r, budget, rng):
    """Mean plus K-norm noise of rate ``n eps / (2 r)``.

    Requires ``||x_i|| <= r`` in ``kind`` for every row.
    """
    kind = NormKind.parse(kind)
    eps = _epsilon(budget)
    radii = np.atleast_1d(norm(data.X, kind))
    bad = np.flatnonzero(radii > r)
    if bad.size:
        raise BoundViolationError(f"row {bad[0]}: ||x|| = {radii[bad[0]]:.6g} exceeds r = {r}", int(bad[0]))
    rate = data.n * eps / (2.0 * r)
    noise = sample_knorm_noise(KNormNoiseParams(data.d, kind, rate), rng)
    return SanitizedEstimate(data.mean + noise, "knorm-mean", {"noise_rate": rate})


def objective_perturbation_gamma(dim, epsilon):
    """Regularization weight ``2 d / (exp(eps / 2) - 1)``."""
    return 2.0 * dim / math.expm1(epsilon / 2.0)


def objective_perturbation(objective, data, cfg, rng, noise=None):
    """Minimize ``l(theta) + gamma/2 ||theta||^2 + b^T theta`` over the l1 ball.

    ``b`` is K-norm noise with rate ``eps / (2 Delta)`` in the objective's
    gradient norm (``eps / (8 (1 + B))`` for the default least-squares
    setup).  ``noise`` fixes ``b`` instead of sampling it.  The final KKT
    residual is reported as ``optimizer_final_gap``.
    """
    if not isinstance(objective, LinearSSE):
        raise UnsupportedOperationError(
            f"objective perturbation needs a strongly convex, twice differentiable loss; "
            f"{objective.name} is not"
        )
    objective.check_data(data)
    eps = cfg.epsilon
    op = cfg.objective_perturbation
    d = data.d
    gamma = objective_perturbation_gamma(d, eps) if op.gamma is None else op.gamma
    rate = eps / (2.0 * objective.gradient_sensitivity()) if op.noise_rate is None else op.noise_rate
    if noise is None:
        b = sample_knorm_noise(KNormNoiseParams(d, objective.norm, rate), rng)
    else:
        b = np.asarray(noise, dtype=float).reshape(d)

    gram, xty = data.gram, data.xty

    def fun(theta):
        return objective.value(data, theta) + 0.5 * gamma * theta @ theta + b @ theta

    def grad(theta):
        return 2.0 * (gram @ theta - xty) + gamma * theta + b

    lipschitz = 2.0 * np.linalg.eigvalsh(gram)[-1] + gamma
    res = projected_gradient(
        fun, grad, objective.domain(d), lipschitz, max_iters=op.max_iters, tol=op.tol
    )
    diag = {"optimizer_final_gap": res.gap, "gamma": gamma, "noise_rate": rate}
    return SanitizedEstimate(res.theta, "objective-perturbation", diag)


def _quantile_coef(n, tau, epsilon, paper_constants):
    weight = (1.0 - tau) if paper_constants else max(tau, 1.0 - tau)
    return epsilon * n / (4.0 * weight)


def private_quantile_log_density(y, tau, epsilon, paper_constants=False):
    """``theta -> -(eps n / (4 w)) |tau - F(theta)|`` with ``w = max(tau, 1 - tau)``.

    ``paper_constants=True`` uses ``w = 1 - tau``.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    coef = _quantile_coef(y.size, tau, epsilon, paper_constants)

    def log_density(theta):
        return -coef * np.abs(tau - empirical_cdf(y, theta))

    return log_density


def private_quantile_pieces(y, tau, epsilon, interval, paper_constants=False):
    """Edges and log masses of the pieces on which the empirical CDF is constant.

    Returns ``(edges, log_mass)``: piece ``k`` is ``[edges[k], edges[k+1])``,
    on which ``F = k / n``, and ``log_mass[k]`` is the log of the
    unnormalized density integrated over it.
    """
    y = np.sort(np.asarray(y, dtype=float).reshape(-1))
    if y.size == 0:
        raise ValueError("private_quantile needs at least one observation")
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    lo, hi = interval.lo[0], interval.hi[0]
    if y[0] < lo or y[-1] > hi:
        raise ValueError(f"observations must lie in [{lo}, {hi}]")
    n = y.size
    edges = np.concatenate([[lo], y, [hi]])
    coef = _quantile_coef(n, tau, epsilon, paper_constants)
    with np.errstate(divide="ignore"):
        log_len = np.log(np.diff(edges))
    log_mass = log_len - coef * np.abs(tau - np.arange(n + 1) / n)
    return edges, log_mass


def private_quantile(y, tau, budget, interval, rng, paper_constants=False):
    """Exact draw from the private quantile density on ``interval``.

    Picks a piece with probability proportional to its mass, then a uniform
    point inside it.
    """
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    edges, log_mass = private_quantile_pieces(
        y, tau, _epsilon(budget), interval, paper_constants
    )
    w = np.exp(log_mass - log_mass.max())
    k = rng.choice(w.size, p=w / w.sum())
    return float(rng.uniform(edges[k], edges[k + 1]))
