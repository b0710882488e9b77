"""Datasets and the four estimation objectives.

Every objective exposes ``value``, ``gradient``, ``gradient_sensitivity``,
``value_sensitivity`` and ``domain``.  ``value`` and ``gradient`` accept a
single parameter vector of shape (d,) or a stack of shape (k, d); stacked
inputs return one entry (or row) per parameter vector.

``stack(datasets)`` returns an evaluator over several datasets at once, one
parameter row per dataset, which is what the batched samplers use.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .domains import Box, L1Ball
from .errors import (
    BoundViolationError,
    EmptyDataError,
    NonDifferentiablePointError,
    UnsupportedOperationError,
)
from .norms import NormKind, norm as _norm

# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True, eq=False)
class Dataset:
    """Covariates ``X`` (n x d), optional responses ``y`` and declared bounds.

    Every entry of ``X`` must lie in ``[-x_bound, x_bound]`` and every
    response in ``[-y_bound, y_bound]``; violations raise
    :class:`BoundViolationError` naming the first offending row.
    """

    X: np.ndarray
    y: np.ndarray | None = None
    x_bound: float = 1.0
    y_bound: float = 1.0

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValueError("X must be a matrix")
        if X.shape[0] == 0:
            raise EmptyDataError("dataset has no rows")
        if X.shape[1] == 0:
            raise ValueError("X has no columns")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        bad = np.flatnonzero(np.any(np.abs(X) > self.x_bound, axis=1))
        if bad.size:
            raise BoundViolationError(
                f"row {bad[0]}: covariate outside [-{self.x_bound}, {self.x_bound}]", int(bad[0])
            )
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if self.y is not None:
            y = np.array(self.y, dtype=float).reshape(-1)
            if y.shape[0] != X.shape[0]:
                raise ValueError(f"y has {y.shape[0]} entries but X has {X.shape[0]} rows")
            if not np.all(np.isfinite(y)):
                raise ValueError("y contains non-finite entries")
            bad = np.flatnonzero(np.abs(y) > self.y_bound)
            if bad.size:
                raise BoundViolationError(
                    f"row {bad[0]}: response outside [-{self.y_bound}, {self.y_bound}]", int(bad[0])
                )
            y.setflags(write=False)
            object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def require_y(self):
        if self.y is None:
            raise ValueError("this objective needs responses y")
        return self.y

    @classmethod
    def from_csv(cls, path, x_bound=1.0, y_bound=1.0):
        """Load a CSV with header ``x1,...,xd`` and an optional final ``y``."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise EmptyDataError(f"{path}: file is empty") from None
            rows = [r for r in reader if r and any(c.strip() for c in r)]
        has_y = bool(header) and header[-1] == "y"
        xcols = header[:-1] if has_y else header
        expected = [f"x{j + 1}" for j in range(len(xcols))]
        if not xcols or xcols != expected:
            raise ValueError(f"{path}: header must be x1..xd[,y], got {','.join(header)}")
        if not rows:
            raise EmptyDataError(f"{path}: no data rows")
        try:
            values = np.array([[float(c) for c in r] for r in rows])
        except ValueError as exc:
            raise ValueError(f"{path}: non-numeric entry ({exc})") from None
        if values.ndim != 2 or values.shape[1] != len(header):
            raise ValueError(f"{path}: every row needs {len(header)} columns")
        if has_y:
            return cls(values[:, :-1], values[:, -1], x_bound=x_bound, y_bound=y_bound)
        return cls(values, None, x_bound=x_bound, y_bound=y_bound)

    # cached sufficient statistics

    @cached_property
    def column_sums(self):
        return self.X.sum(axis=0)

    @cached_property
    def mean(self):
        return self.X.mean(axis=0)

    @cached_property
    def within_ss(self):
        return float(np.sum((self.X - self.mean) ** 2))

    @cached_property
    def gram(self):
        return self.X.T @ self.X

    @cached_property
    def xty(self):
        return self.X.T @ self.require_y()

    @cached_property
    def _qr_stats(self):
        """``(R, z, sse_min)`` from the thin QR ``X = QR`` with ``z = Q^T y``."""
        y = self.require_y()
        Q, R = np.linalg.qr(self.X)
        z = Q.T @ y
        r = y - Q @ z
        return R, z, float(r @ r)


def empirical_cdf(y, theta):
    """Fraction of the points in ``y`` that are <= ``theta``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size == 0:
        raise ValueError("empirical_cdf needs at least one point")
    t = np.asarray(theta, dtype=float)
    counts = np.searchsorted(np.sort(y), t, side="right")
    out = counts / y.size
    return float(out) if t.ndim == 0 else out


def _as_rows(theta, d):
    t = np.asarray(theta, dtype=float)
    single = t.ndim == 1
    t = np.atleast_2d(t)
    if t.ndim != 2 or t.shape[1] != d:
        raise ValueError(f"theta has shape {np.shape(theta)}, expected ({d},) or (k, {d})")
    return t, single


def _finish(out, single):
    if single:
        return float(out[0]) if out.ndim == 1 else out[0]
    return out


# ---------------------------------------------------------------------------
# objectives


class Objective:
    """Shared plumbing; subclasses implement the ``_value`` / ``_gradient`` kernels."""

    name = "objective"
    norm: NormKind

    def value(self, data, theta):
        t, single = _as_rows(theta, data.d)
        return _finish(self._value(data, t), single)

    def gradient(self, data, theta):
        t, single = _as_rows(theta, data.d)
        return _finish(self._gradient(data, t), single)

    def gradient_sensitivity(self, theta=None):
        raise NotImplementedError

    def value_sensitivity(self, dim=None):
        raise UnsupportedOperationError(f"{self.name} has no value sensitivity bound")

    def domain(self, dim):
        raise NotImplementedError

    def check_data(self, data):
        """Raise if ``data`` cannot be used with this objective."""

    def stack(self, datasets):
        """Evaluator over several datasets; row i of theta pairs with dataset i."""
        return _LoopStack(self, datasets)

    def _value(self, data, t):
        raise NotImplementedError

    def _gradient(self, data, t):
        raise NotImplementedError


class _LoopStack:
    def __init__(self, objective, datasets):
        self.objective = objective
        self.datasets = list(datasets)

    def value(self, thetas):
        return np.array([self.objective.value(D, t) for D, t in zip(self.datasets, thetas)])

    def gradient(self, thetas):
        return np.stack([self.objective.gradient(D, t) for D, t in zip(self.datasets, thetas)])


def _check_unit_bounds(data, name):
    if data.x_bound > 1 or (data.y is not None and data.y_bound > 1):
        raise ValueError(f"{name} sensitivities assume |x_ij| <= 1 and |y_i| <= 1; rescale the data")


@dataclass(frozen=True)
class MeanSSE(Objective):
    """Sum of squared distances ``sum_i ||x_i - theta||_2^2``.

    ``r`` bounds the data, ``||x_i|| <= r`` in ``norm``.  The gradient
    sensitivity is ``4r``; with ``paper_constants=True`` it is ``2r``.
    """

    r: float = 1.0
    norm: NormKind = NormKind.L2
    paper_constants: bool = False
    name = "mean"

    def __post_init__(self):
        object.__setattr__(self, "norm", NormKind.parse(self.norm))
        if not self.r > 0:
            raise ValueError("r must be positive")

    def _value(self, data, t):
        diff = t - data.mean
        return data.within_ss + data.n * np.sum(diff * diff, axis=1)

    def _gradient(self, data, t):
        return -2.0 * data.n * (data.mean - t)

    def gradient_sensitivity(self, theta=None):
        return (2.0 if self.paper_constants else 4.0) * self.r

    def value_sensitivity(self, dim=None):
        # sup ||x - theta||_2^2 with x and theta both in the cube of half-width r
        if dim is None:
            raise ValueError("MeanSSE value sensitivity depends on the dimension")
        return 4.0 * dim * self.r**2

    def domain(self, dim):
        return Box.cube(self.r, dim)

    def check_data(self, data):
        radii = _norm(data.X, self.norm)
        bad = np.flatnonzero(np.atleast_1d(radii) > self.r * (1 + 1e-12))
        if bad.size:
            raise BoundViolationError(f"row {bad[0]}: ||x|| exceeds r = {self.r}", int(bad[0]))

    def stack(self, datasets):
        return _MeanStack(datasets)


class _MeanStack:
    def __init__(self, datasets):
        self.mean = np.stack([D.mean for D in datasets])
        self.n = np.array([D.n for D in datasets], dtype=float)
        self.ss = np.array([D.within_ss for D in datasets])

    def value(self, thetas):
        diff = thetas - self.mean
        return self.ss + self.n * np.sum(diff * diff, axis=1)

    def gradient(self, thetas):
        return -2.0 * self.n[:, None] * (self.mean - thetas)


@dataclass(frozen=True)
class LinearSSE(Objective):
    """Least-squares loss ``sum_i (y_i - x_i^T theta)^2`` over ``||theta||_1 <= B``.

    Assumes entries of ``x`` and ``y`` in ``[-1, 1]``.  ``x_norm_bound`` is
    ``sup ||x_i||`` in ``norm`` (1 for the default l-infinity norm).
    """

    B: float = 1.0
    norm: NormKind = NormKind.LINF
    x_norm_bound: float = 1.0
    name = "linear"

    def __post_init__(self):
        object.__setattr__(self, "norm", NormKind.parse(self.norm))
        if not self.B > 0:
            raise ValueError("B must be positive")
        if not self.x_norm_bound > 0:
            raise ValueError("x_norm_bound must be positive")

    def _value(self, data, t):
        # SSE(theta) = ||z - R theta||^2 + SSE_min: two nonnegative terms, no
        # cancellation and no solve, so it stays accurate for ill-conditioned X
        R, z, sse_min = data._qr_stats
        resid = z - t @ R.T
        return sse_min + np.sum(resid * resid, axis=1)

    def _gradient(self, data, t):
        return 2.0 * (t @ data.gram - data.xty)

    def gradient_sensitivity(self, theta=None):
        return 4.0 * (1.0 + self.B) * self.x_norm_bound

    def value_sensitivity(self, dim=None):
        return (1.0 + self.B) ** 2

    def domain(self, dim):
        return L1Ball(self.B, dim)

    def check_data(self, data):
        data.require_y()
        _check_unit_bounds(data, "LinearSSE")

    def stack(self, datasets):
        datasets = list(datasets)
        if len({D._qr_stats[0].shape for D in datasets}) != 1:
            return _LoopStack(self, datasets)
        return _LinearStack(datasets)


class _LinearStack:
    def __init__(self, datasets):
        self.gram = np.stack([D.gram for D in datasets])
        self.xty = np.stack([D.xty for D in datasets])
        stats = [D._qr_stats for D in datasets]
        self.R = np.stack([R for R, _, _ in stats])
        self.z = np.stack([z for _, z, _ in stats])
        self.sse_min = np.array([s for _, _, s in stats])

    def value(self, thetas):
        resid = self.z - np.einsum("mij,mj->mi", self.R, thetas)
        return self.sse_min + np.sum(resid * resid, axis=1)

    def gradient(self, thetas):
        return 2.0 * (np.einsum("mij,mj->mi", self.gram, thetas) - self.xty)


@dataclass(frozen=True)
class GeometricMedian(Objective):
    """Sum of Euclidean distances ``sum_i ||x_i - theta||_2``.

    The gradient ``-sum_i (x_i - theta) / ||x_i - theta||`` is a sum of unit
    vectors, so its sensitivity is 2 when measured in the l2 or l-infinity
    norm.  ``r`` is the half-width of the cube searched by the mechanisms.
    """

    r: float = 1.0
    norm: NormKind = NormKind.L2
    name = "median"

    def __post_init__(self):
        object.__setattr__(self, "norm", NormKind.parse(self.norm))
        if self.norm is NormKind.L1:
            raise ValueError("GeometricMedian supports the l2 and l-infinity gradient norms")
        if not self.r > 0:
            raise ValueError("r must be positive")

    def _value(self, data, t):
        diff = data.X[None, :, :] - t[:, None, :]
        return np.sqrt(np.sum(diff * diff, axis=2)).sum(axis=1)

    def _gradient(self, data, t):
        diff = data.X[None, :, :] - t[:, None, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        if np.any(dist == 0):
            raise NonDifferentiablePointError("theta coincides with a data point")
        return -np.sum(diff / dist[:, :, None], axis=1)

    def gradient_sensitivity(self, theta=None):
        return 2.0

    def domain(self, dim):
        return Box.cube(self.r, dim)

    def check_data(self, data):
        if np.any(np.abs(data.X) > self.r):
            raise ValueError("data fall outside the search cube of half-width r")


@dataclass(frozen=True)
class QuantileLoss(Objective):
    """Check loss ``sum_i rho_tau(y_i - x_i^T theta)`` over ``||theta||_1 <= B``.

    ``rho_tau(z) = (tau - 1) z 1[z <= 0] + tau z 1[z > 0]``.  ``c_x`` bounds
    ``||x_i||`` in ``norm``.  The gradient sensitivity is
    ``2 max(tau, 1 - tau) c_x``; ``paper_constants=True`` gives
    ``2 (1 - tau) c_x``, which is only a valid bound for ``tau <= 1/2``.
    """

    tau: float = 0.5
    B: float = 1.0
    c_x: float = 1.0
    norm: NormKind = NormKind.LINF
    paper_constants: bool = False
    name = "quantile"

    def __post_init__(self):
        object.__setattr__(self, "norm", NormKind.parse(self.norm))
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if not self.B > 0 or not self.c_x > 0:
            raise ValueError("B and c_x must be positive")

    def rho(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z <= 0, (self.tau - 1.0) * z, self.tau * z)

    def _value(self, data, t):
        resid = data.require_y()[:, None] - data.X @ t.T
        return self.rho(resid).sum(axis=0)

    def _gradient(self, data, t):
        below = (data.require_y()[:, None] <= data.X @ t.T).astype(float)
        return below.T @ data.X - self.tau * data.column_sums

    def gradient_sensitivity(self, theta=None):
        weight = (1.0 - self.tau) if self.paper_constants else max(self.tau, 1.0 - self.tau)
        return 2.0 * weight * self.c_x

    def value_sensitivity(self, dim=None):
        return 2.0 * max(self.tau, 1.0 - self.tau) * (1.0 + self.B)

    def domain(self, dim):
        return L1Ball(self.B, dim)

    def check_data(self, data):
        data.require_y()
        _check_unit_bounds(data, "QuantileLoss")

    def stack(self, datasets):
        datasets = list(datasets)
        if len({D.n for D in datasets}) != 1:
            return _LoopStack(self, datasets)
        return _QuantileStack(self, datasets)


@dataclass
class _QuantileStack:
    objective: QuantileLoss
    datasets: list
    X: np.ndarray = field(init=False)
    y: np.ndarray = field(init=False)

    def __post_init__(self):
        self.X = np.stack([D.X for D in self.datasets])
        self.y = np.stack([D.require_y() for D in self.datasets])
        self.sums = self.X.sum(axis=1)

    def value(self, thetas):
        resid = self.y - np.einsum("mnd,md->mn", self.X, thetas)
        return self.objective.rho(resid).sum(axis=1)

    def gradient(self, thetas):
        fitted = np.einsum("mnd,md->mn", self.X, thetas)
        below = (self.y <= fitted).astype(float)
        return np.einsum("mn,mnd->md", below, self.X) - self.objective.tau * self.sums
