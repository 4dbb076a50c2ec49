"""Discretization windows for the grid-scanning checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

DEFAULT_RADIUS = 2.0
DEFAULT_RESOLUTION = 0.05
DEFAULT_TOL = 1e-9


def axis_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Grid ``lo + k*step`` inside ``[lo, hi]``, snapped to 12 decimals."""
    if hi <= lo:
        return np.zeros(0)
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


@dataclass(frozen=True)
class BoxProbe:
    """Axis-aligned box in ``Z`` (primal coordinates first) scanned at ``resolution``.

    A box with ``lo == hi`` on some axis is degenerate and has an empty grid.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    resolution: float = DEFAULT_RESOLUTION
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        lo = tuple(float(v) for v in np.ravel(self.lo))
        hi = tuple(float(v) for v in np.ravel(self.hi))
        if len(lo) != len(hi) or len(lo) == 0 or len(lo) % 2:
            raise ValueError("probe bounds must have equal, even length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("probe needs lo <= hi componentwise")
        if not (self.resolution > 0 and self.tol > 0):
            raise ValueError("resolution and tol must be positive")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "resolution", float(self.resolution))
        object.__setattr__(self, "tol", float(self.tol))

    @classmethod
    def cube(cls, n: int, radius: float = DEFAULT_RADIUS, resolution: float = DEFAULT_RESOLUTION,
             tol: float = DEFAULT_TOL) -> "BoxProbe":
        return cls((-radius,) * (2 * n), (radius,) * (2 * n), resolution, tol)

    @classmethod
    def from_boxes(cls, x_lo, x_hi, xs_lo, xs_hi, resolution=DEFAULT_RESOLUTION,
                   tol=DEFAULT_TOL) -> "BoxProbe":
        return cls(tuple(np.ravel(x_lo)) + tuple(np.ravel(xs_lo)),
                   tuple(np.ravel(x_hi)) + tuple(np.ravel(xs_hi)), resolution, tol)

    @property
    def n(self) -> int:
        return len(self.lo) // 2

    @property
    def x_lo(self) -> np.ndarray:
        return np.array(self.lo[:self.n])

    @property
    def x_hi(self) -> np.ndarray:
        return np.array(self.hi[:self.n])

    @property
    def xstar_lo(self) -> np.ndarray:
        return np.array(self.lo[self.n:])

    @property
    def xstar_hi(self) -> np.ndarray:
        return np.array(self.hi[self.n:])

    @property
    def degenerate(self) -> bool:
        return any(a == b for a, b in zip(self.lo, self.hi))

    def with_(self, resolution: Optional[float] = None, tol: Optional[float] = None) -> "BoxProbe":
        return BoxProbe(self.lo, self.hi, resolution or self.resolution, tol or self.tol)

    def padded(self, steps: Optional[int] = None) -> "BoxProbe":
        """Box grown by ``steps`` grid steps on every side (default: one half-width).

        Padding by whole steps keeps the grid of the padded box aligned with
        the original one.
        """
        if steps is None:
            half = max((b - a) / 2 for a, b in zip(self.lo, self.hi))
            steps = max(1, int(math.ceil(half / self.resolution - 1e-9)))
        d = steps * self.resolution
        return BoxProbe(tuple(a - d for a in self.lo), tuple(b + d for b in self.hi),
                        self.resolution, self.tol)

    def axes(self) -> list[np.ndarray]:
        if self.degenerate:
            return [np.zeros(0) for _ in self.lo]
        return [axis_grid(a, b, self.resolution) for a, b in zip(self.lo, self.hi)]

    def x_axes(self) -> list[np.ndarray]:
        return self.axes()[:self.n]

    def xstar_axes(self) -> list[np.ndarray]:
        return self.axes()[self.n:]

    def size(self) -> int:
        return int(np.prod([a.size for a in self.axes()]))

    def points(self) -> np.ndarray:
        """All grid points as an ``(N, 2n)`` array in lexicographic order."""
        return np.vstack(list(self.chunks())) if self.size() else np.zeros((0, 2 * self.n))

    def chunks(self, max_rows: int = 1 << 19) -> Iterator[np.ndarray]:
        """Grid points in lexicographic order, in blocks of at most ``max_rows``
        (a block is never split inside the last axis)."""
        yield from grid_chunks(self.axes(), max_rows)

    def contains(self, Z: np.ndarray, slack: float = 1e-12) -> np.ndarray:
        Z = np.atleast_2d(Z)
        return np.all((Z >= np.array(self.lo) - slack) & (Z <= np.array(self.hi) + slack), axis=1)


def grid_chunks(axes: list[np.ndarray], max_rows: int = 1 << 19) -> Iterator[np.ndarray]:
    if any(a.size == 0 for a in axes):
        return
    # split off leading axes until the trailing block fits
    lead = 0
    block = int(np.prod([a.size for a in axes]))
    while lead < len(axes) - 1 and block > max_rows:
        block //= axes[lead].size
        lead += 1
    tail = np.stack(np.meshgrid(*axes[lead:], indexing="ij"), axis=-1).reshape(-1, len(axes) - lead)
    for prefix in itertools.product(*axes[:lead]):
        if prefix:
            yield np.hstack([np.broadcast_to(np.array(prefix), (tail.shape[0], lead)), tail])
        else:
            yield tail


def grid_product(axes: list[np.ndarray]) -> np.ndarray:
    if any(a.size == 0 for a in axes):
        return np.zeros((0, len(axes)))
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
