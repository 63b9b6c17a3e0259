"""Diagonal space(-time) metrics, index raising/lowering, and Lorentz boosts."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EUCLIDEAN = "euclidean"
MINKOWSKI = "minkowski"


@dataclass(frozen=True)
class MetricSignature:
    """Diagonal metric tensor with entries +-1.

    Index 0 is the temporal axis for the Minkowski signature.  The diagonal
    is stored explicitly so a future non-unit diagonal needs no interface
    change; a +-1 diagonal is its own dual, so raising and lowering use the
    same signs.
    """

    dim: int
    kind: str
    diagonal: tuple[int, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"metric dimension must be >= 1, got {self.dim}")
        if len(self.diagonal) != self.dim:
            raise ValueError("diagonal length does not match dim")
        if self.kind == EUCLIDEAN:
            expected = (1,) * self.dim
        elif self.kind == MINKOWSKI:
            expected = (1,) + (-1,) * (self.dim - 1)
        else:
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if tuple(self.diagonal) != expected:
            raise ValueError(f"{self.kind} metric requires diagonal {expected}")

    @classmethod
    def euclidean(cls, dim: int) -> "MetricSignature":
        return cls(dim, EUCLIDEAN, (1,) * dim)

    @classmethod
    def minkowski(cls, dim: int) -> "MetricSignature":
        if dim < 2:
            raise ValueError("Minkowski signature needs dim >= 2")
        return cls(dim, MINKOWSKI, (1,) + (-1,) * (dim - 1))

    @classmethod
    def from_name(cls, name: str, dim: int) -> "MetricSignature":
        name = name.lower()
        if name == EUCLIDEAN:
            return cls.euclidean(dim)
        if name == MINKOWSKI:
            return cls.minkowski(dim)
        raise ValueError(f"unknown metric name {name!r} (euclidean|minkowski)")

    @property
    def signs(self) -> np.ndarray:
        """Diagonal as a float vector (shared by the metric and its dual)."""
        return np.asarray(self.diagonal, dtype=float)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.signs)


@dataclass(frozen=True)
class BoostParameters:
    """A standard boost: velocity fraction beta along one spatial axis."""

    beta: float
    axis: int = 1

    def __post_init__(self):
        if not -1.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (-1, 1), got {self.beta}")
        if self.axis < 1:
            raise ValueError("boost axis must be a spatial index >= 1")

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.beta * self.beta)


def _check_vector(metric: MetricSignature, v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (metric.dim,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({metric.dim},)")
    return v


def contract(metric: MetricSignature, u, v) -> float:
    """Bilinear form sum_nu eta^{nu nu} u_nu v_nu."""
    u = _check_vector(metric, u, "u")
    v = _check_vector(metric, v, "v")
    return float(np.sum(metric.signs * u * v))


def lower_index(metric: MetricSignature, v_contravariant) -> np.ndarray:
    """Flip signs on the negative-signature axes (contravariant -> covariant)."""
    v = _check_vector(metric, v_contravariant, "v")
    return metric.signs * v


def raise_index(metric: MetricSignature, v_covariant) -> np.ndarray:
    """Inverse of lower_index; identical signs since the diagonal is self-dual."""
    v = _check_vector(metric, v_covariant, "v")
    return metric.signs * v


def boost_matrix(metric: MetricSignature, boost: BoostParameters) -> np.ndarray:
    """Standard boost matrix along one spatial axis.

    Satisfies L^T eta L = eta; beta = 0 gives the identity.
    """
    if metric.kind != MINKOWSKI:
        raise ValueError("boosts are defined for the Minkowski signature only")
    if boost.axis >= metric.dim:
        raise ValueError(f"boost axis {boost.axis} out of range for dim {metric.dim}")
    g = boost.gamma
    gb = g * boost.beta
    a = boost.axis
    lam = np.eye(metric.dim)
    lam[0, 0] = g
    lam[a, a] = g
    lam[0, a] = -gb
    lam[a, 0] = -gb
    return lam
