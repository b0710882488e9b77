"""One-at-a-time random-walk Metropolis over a bounded convex set.

Each sweep visits the coordinates in order and proposes
``theta_j + Uniform(-w_j, w_j)``.  Proposals outside the domain are rejected,
which keeps the uniform base measure on the domain intact.  A draw is the
state after the final sweep.

``run_chains`` advances many independent chains in lockstep so the log
density can be evaluated for all of them in one vectorized call.  Every chain
consumes only its own generator, so chain ``i`` of a batch is the same draw
it would be when run alone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import SamplingError

logger = logging.getLogger(__name__)

DEFAULT_WIDTH_FRACTION = 0.05
# sweeps of randomness drawn per generator call
_BLOCK = 256
ACCEPTANCE_BAND = (0.1, 0.7)


@dataclass(frozen=True)
class SamplerConfig:
    """Number of sweeps, proposal half-width and seed.

    ``proposal_width=None`` uses 5% of the domain's extent along each
    coordinate.  ``init=None`` starts at the domain center.
    """

    steps: int = 1000
    proposal_width: float | tuple | None = None
    seed: int = 0
    init: tuple | None = None

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps!r}")
        if self.proposal_width is not None and np.any(np.asarray(self.proposal_width) <= 0):
            raise ValueError("proposal_width must be positive")

    def widths(self, domain):
        if self.proposal_width is None:
            return DEFAULT_WIDTH_FRACTION * domain.extent()
        return np.broadcast_to(np.asarray(self.proposal_width, dtype=float), (domain.dim,)).copy()

    def start(self, domain):
        x0 = domain.center() if self.init is None else np.asarray(self.init, dtype=float)
        if x0.shape != (domain.dim,):
            raise ValueError(f"init has shape {x0.shape}, expected ({domain.dim},)")
        if not domain.contains(x0):
            raise ValueError("init lies outside the domain")
        return x0


@dataclass
class ChainResult:
    """Final states (m, d) and per-chain acceptance rates (m,)."""

    theta: np.ndarray
    acceptance_rate: np.ndarray


def run_chains(log_density, domain, cfg, rngs):
    """Run ``len(rngs)`` independent chains and return their final states.

    Parameters
    ----------
    log_density : callable
        Maps an (m, d) array to m log densities, row i belonging to chain i.
        It is evaluated on every row each step, so it must return something
        (even nan) for points outside the domain; those rows are rejected.
    domain : L1Ball or Box
    cfg : SamplerConfig
    rngs : sequence of numpy.random.Generator
        One generator per chain.
    """
    m, d = len(rngs), domain.dim
    widths = cfg.widths(domain)
    theta = np.tile(cfg.start(domain), (m, 1))
    current = np.asarray(log_density(theta), dtype=float)
    if current.shape != (m,) or not np.all(np.isfinite(current)):
        raise ValueError("log density must be finite at the initial state")

    accepted = np.zeros(m, dtype=np.int64)
    done = 0
    while done < cfg.steps:
        block = min(_BLOCK, cfg.steps - done)
        steps = np.stack([g.uniform(-1.0, 1.0, size=(block, d)) for g in rngs], axis=1)
        steps *= widths
        log_u = np.log(np.stack([g.random((block, d)) for g in rngs], axis=1))
        for s in range(block):
            for j in range(d):
                proposal = theta.copy()
                proposal[:, j] += steps[s, :, j]
                inside = domain.contains(proposal)
                lp = np.asarray(log_density(proposal), dtype=float)
                ok = inside & (log_u[s, :, j] < lp - current)
                if ok.any():
                    theta[ok] = proposal[ok]
                    current[ok] = lp[ok]
                    accepted[ok] += 1
        done += block
    return ChainResult(theta, accepted / (cfg.steps * d))


def check_acceptance(result, label="chain"):
    """Boolean mask of chains that never accepted a move.

    Chains whose acceptance rate leaves ``ACCEPTANCE_BAND`` are logged as a
    warning, once per batch.
    """
    failed = result.acceptance_rate == 0
    lo, hi = ACCEPTANCE_BAND
    off = ~failed & ((result.acceptance_rate < lo) | (result.acceptance_rate > hi))
    if off.any():
        logger.warning(
            "%s: %d of %d chains had acceptance outside [%.1f, %.1f] (min %.3g, max %.3g)",
            label, int(off.sum()), off.size, lo, hi,
            float(result.acceptance_rate.min()), float(result.acceptance_rate.max()),
        )
    return failed


def mcmc_draw(log_density, domain, cfg):
    """Single-chain draw from ``exp(log_density)`` on ``domain``.

    ``log_density`` takes one parameter vector and returns a float.  Returns
    ``(theta, acceptance_rate)``.
    """

    def batched(t):
        return np.array([log_density(row) for row in t])

    result = run_chains(batched, domain, cfg, [np.random.default_rng(cfg.seed)])
    if check_acceptance(result, "mcmc_draw")[0]:
        raise SamplingError("chain rejected every proposal", {"mcmc_acceptance_rate": 0.0})
    return result.theta[0], float(result.acceptance_rate[0])
