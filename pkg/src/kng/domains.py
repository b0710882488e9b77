"""Bounded convex parameter sets used as the support of the mechanisms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class L1Ball:
    """``{theta in R^dim : ||theta||_1 <= radius}``."""

    radius: float
    dim: int

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("L1Ball radius must be positive")
        if self.dim < 1:
            raise ValueError("L1Ball dim must be at least 1")

    def contains(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.abs(theta).sum(axis=-1) <= self.radius

    def center(self):
        return np.zeros(self.dim)

    def extent(self):
        """Width of the set along each coordinate axis."""
        return np.full(self.dim, 2.0 * self.radius)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``lo <= theta <= hi`` (coordinate-wise)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise ValueError("Box bounds must be nonempty and of equal length")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise ValueError("Box requires lo < hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, half_width, dim):
        return cls((-half_width,) * dim, (half_width,) * dim)

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, theta):
        theta = np.asarray(theta, dtype=float)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return np.all((theta >= lo) & (theta <= hi), axis=-1)

    def center(self):
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))

    def extent(self):
        return np.asarray(self.hi) - np.asarray(self.lo)


class Interval(Box):
    """Closed interval ``[lo, hi]`` viewed as a one-dimensional box."""

    def __init__(self, lo, hi):
        super().__init__((float(lo),), (float(hi),))

    def __repr__(self):
        return f"Interval({self.lo[0]!r}, {self.hi[0]!r})"
