"""Norms on R^d and exact samplers for K-norm noise.

A K-norm noise vector ``b`` has density proportional to ``exp(-c * ||b||)``.
Writing ``b = R * u`` with ``u`` on the unit sphere of the norm, the radius
``R`` is Gamma(d, rate=c) and ``u`` follows the cone measure of the unit
ball, which for l1, l2 and l-infinity has a direct construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class NormKind(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"

    @classmethod
    def parse(cls, value):
        """Accept an existing member or its name/value (case-insensitive)."""
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"inf": "linf", "l_inf": "linf", "max": "linf", "1": "l1", "2": "l2"}
        key = aliases.get(key, key)
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown norm kind {value!r}")


def norm(v, kind=NormKind.L2):
    """Norm of ``v`` along its last axis.

    A 1-d input returns a float; stacked inputs of shape (..., d) return an
    array of shape (...).
    """
    kind = NormKind.parse(kind)
    v = np.asarray(v, dtype=float)
    if v.ndim == 0 or v.shape[-1] == 0:
        raise ValueError("norm of an empty vector is undefined")
    a = np.abs(v)
    if kind is NormKind.L1:
        out = a.sum(axis=-1)
    elif kind is NormKind.L2:
        out = np.sqrt(np.sum(v * v, axis=-1))
    else:
        out = a.max(axis=-1)
    return float(out) if v.ndim == 1 else out


@dataclass(frozen=True)
class KNormNoiseParams:
    """Dimension, norm and rate ``c`` of a K-norm noise distribution."""

    dim: int
    kind: NormKind
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind.parse(self.kind))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if not np.isfinite(self.rate) or self.rate <= 0:
            raise ValueError(f"rate must be positive and finite, got {self.rate!r}")


def _unit_directions(kind, dim, size, rng):
    if kind is NormKind.L2:
        g = rng.standard_normal((size, dim))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    if kind is NormKind.L1:
        e = rng.standard_exponential((size, dim))
        signs = rng.choice(np.array([-1.0, 1.0]), size=(size, dim))
        return signs * e / e.sum(axis=1, keepdims=True)
    # l-infinity: every face of the cube carries equal cone measure
    u = rng.uniform(-1.0, 1.0, size=(size, dim))
    face = rng.integers(0, 2 * dim, size=size)
    rows = np.arange(size)
    u[rows, face % dim] = np.where(face < dim, 1.0, -1.0)
    return u


def sample_knorm_noise(params, rng, size=None):
    """Draw K-norm noise with density proportional to ``exp(-rate * ||b||)``.

    Parameters
    ----------
    params : KNormNoiseParams
    rng : numpy.random.Generator
    size : int, optional
        Number of independent vectors.  ``None`` returns a single vector of
        shape (dim,); otherwise the result has shape (size, dim).
    """
    if not isinstance(params, KNormNoiseParams):
        raise TypeError("params must be a KNormNoiseParams")
    m = 1 if size is None else int(size)
    radius = rng.gamma(shape=params.dim, scale=1.0 / params.rate, size=m)
    out = radius[:, None] * _unit_directions(params.kind, params.dim, m, rng)
    return out[0] if size is None else out
