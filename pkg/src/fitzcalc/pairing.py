"""Points of ``Z = R^n x R^n`` and the natural duality on ``Z``.

A point ``z = (x, x*)`` couples a primal vector with a dual one. Two bilinear
quantities drive everything else in the package:

* the coupling ``p(z) = <x, x*>``;
* the dual product ``z . w = <x*, y> + <y*, x>`` for ``w = (y, y*)``.

Extended reals are plain Python floats; ``math.inf`` is the explicit
``+infinity`` used for indicator functions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

INF = math.inf


def as_vec(values, dim: Optional[int] = None) -> np.ndarray:
    """Copy ``values`` into a read-only, finite, 1-d float array."""
    v = np.array(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("vectors need at least one coordinate")
    if dim is not None and v.size != dim:
        raise ValueError(f"expected dimension {dim}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"vector entries must be finite: {v}")
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class PairedPoint:
    x: np.ndarray
    xstar: np.ndarray

    def __post_init__(self):
        x = as_vec(self.x)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xstar", as_vec(self.xstar, x.size))

    @property
    def dim(self) -> int:
        return self.x.size

    @classmethod
    def from_array(cls, arr) -> "PairedPoint":
        arr = np.asarray(arr, dtype=float).ravel()
        if arr.size % 2:
            raise ValueError("a point of Z has an even number of coordinates")
        n = arr.size // 2
        return cls(arr[:n], arr[n:])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.xstar])

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.as_array())

    def __eq__(self, other):
        if not isinstance(other, PairedPoint):
            return NotImplemented
        return self.as_tuple() == other.as_tuple()

    def __hash__(self):
        return hash(self.as_tuple())

    def __add__(self, other: "PairedPoint") -> "PairedPoint":
        return PairedPoint(self.x + other.x, self.xstar + other.xstar)

    def __sub__(self, other: "PairedPoint") -> "PairedPoint":
        return PairedPoint(self.x - other.x, self.xstar - other.xstar)

    def __neg__(self) -> "PairedPoint":
        return PairedPoint(-self.x, -self.xstar)

    def __mul__(self, lam: float) -> "PairedPoint":
        return PairedPoint(lam * self.x, lam * self.xstar)

    __rmul__ = __mul__

    def __repr__(self):
        fmt = lambda v: "(" + ", ".join(f"{t:g}" for t in v) + ")"
        return f"PairedPoint(x={fmt(self.x)}, xstar={fmt(self.xstar)})"


def point(x, xstar) -> PairedPoint:
    return PairedPoint(x, xstar)


def pairing_p(z: PairedPoint) -> float:
    """The duality pairing ``p(x, x*) = <x, x*>``."""
    return float(np.dot(z.x, z.xstar))


def dual_product(z: PairedPoint, w: PairedPoint) -> float:
    """``(x, x*) . (y, y*) = <x*, y> + <y*, x>``; symmetric in its arguments."""
    if z.dim != w.dim:
        raise ValueError(f"dimension mismatch: {z.dim} vs {w.dim}")
    return float(np.dot(z.xstar, w.x) + np.dot(w.xstar, z.x))


def pairing_rows(Z: np.ndarray) -> np.ndarray:
    """Row-wise ``p`` for an ``(N, 2n)`` array of stacked points."""
    Z = np.atleast_2d(Z)
    n = Z.shape[1] // 2
    return np.einsum("ij,ij->i", Z[:, :n], Z[:, n:])


def swap_halves(Z: np.ndarray) -> np.ndarray:
    """``(x, x*) -> (x*, x)``; turns the dual product into a Euclidean dot."""
    Z = np.atleast_2d(Z)
    n = Z.shape[1] // 2
    return np.concatenate([Z[:, n:], Z[:, :n]], axis=1)


def stack_points(points: Iterable[PairedPoint]) -> np.ndarray:
    rows = [z.as_array() for z in points]
    if not rows:
        raise ValueError("no points given")
    return np.vstack(rows)


class Bound(str, enum.Enum):
    """How a computed extended real relates to the true value."""

    EXACT = "exact"
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class Evaluation:
    """An extended-real result together with its certification status.

    ``resolution`` is set when the value comes from a discretized graph.
    """

    value: float
    bound: Bound = Bound.EXACT
    resolution: Optional[float] = None

    def __post_init__(self):
        if math.isnan(self.value):
            raise ArithmeticError("evaluation produced NaN")

    def __float__(self):
        return float(self.value)

    @property
    def exact(self) -> bool:
        return self.bound is Bound.EXACT

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)
