"""Brute-force reference computations.

Nothing here reuses the exact code paths: grids are enumerated with
``itertools`` and arithmetic is done on plain Python floats, so agreement
with the LP and closed-form routines is a genuine cross-check.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Optional, Sequence

import numpy as np

from .probe import BoxProbe


def _axis(lo: float, hi: float, step: float) -> list[float]:
    if hi <= lo:
        return []
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 12) for k in range(count)]


def grid_extremum(f: Callable[[tuple], float], probe: BoxProbe, mode: str = "SUP") -> float:
    """Exhaustive extremum of ``f`` over the probe grid.

    ``f`` receives the flat coordinate tuple of a grid point. A grid sup is a
    lower bound on the true sup (and a grid inf an upper bound on the inf).
    """
    mode = mode.upper()
    if mode not in ("SUP", "INF"):
        raise ValueError("mode must be SUP or INF")
    axes = [_axis(a, b, probe.resolution) for a, b in zip(probe.lo, probe.hi)]
    best = -math.inf if mode == "SUP" else math.inf
    for z in itertools.product(*axes):
        v = float(f(z))
        best = max(best, v) if mode == "SUP" else min(best, v)
    return best


def _dot(u: Sequence[float], v: Sequence[float]) -> float:
    return sum(a * b for a, b in zip(u, v))


def dual_product_plain(z: Sequence[float], w: Sequence[float]) -> float:
    n = len(z) // 2
    return _dot(z[n:], w[:n]) + _dot(w[n:], z[:n])


def coupling_plain(z: Sequence[float]) -> float:
    n = len(z) // 2
    return _dot(z[:n], z[n:])


def compositions(total: int, parts: int) -> np.ndarray:
    """All non-negative integer vectors of length ``parts`` summing to ``total``."""
    rows = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(total + parts - 1 - prev - 1)
        rows.append(row)
    return np.array(rows, dtype=float).reshape(-1, parts)


def _flat(v) -> np.ndarray:
    return np.asarray(v.as_array() if hasattr(v, "as_array") else v, dtype=float)


HIT_TOL = 1e-9


def simplex_grid_search(points, values: Sequence[float], z, steps: int,
                        slack: Optional[float] = None):
    """``(value, weights)`` of the cheapest simplex-grid combination landing on ``z``.

    Weights have denominator ``steps``. A combination is admissible when it
    lands within ``slack`` of ``z`` (default: an exact hit up to ``1e-9``);
    ``(inf, None)`` when none is. With exact hits the result bounds the convex
    hull value from above and is nonincreasing along ``steps = 2, 4, 8, ...``
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    radius = HIT_TOL if slack is None else float(slack)
    P = np.array([_flat(p) for p in points])
    vals = np.asarray(values, dtype=float)
    lam = compositions(steps, len(P)) / steps
    miss = np.sqrt(((lam @ P - _flat(z)) ** 2).sum(axis=1))
    ok = np.flatnonzero(miss <= radius + 1e-12)
    if ok.size == 0:
        return math.inf, None
    costs = lam[ok] @ vals
    best = ok[int(np.argmin(costs))]
    return float(costs.min()), lam[best]


def simplex_grid_convexhull_value(points, values: Sequence[float], z, steps: int,
                                  slack: Optional[float] = None) -> float:
    """``min sum l_i v_i`` over simplex-grid weights landing on ``z``; see
    :func:`simplex_grid_search`. ``slack=2/steps`` gives the relaxed variant."""
    return simplex_grid_search(points, values, z, steps, slack)[0]


def pairwise_monotone_bruteforce(points) -> bool:
    """All pairs satisfy ``<x1 - x2, x1* - x2*> >= -1e-12``."""
    rows = [tuple(float(v) for v in _flat(p)) for p in points]
    for a, b in itertools.combinations(rows, 2):
        d = [s - t for s, t in zip(a, b)]
        if coupling_plain(d) < -1e-12:
            return False
    return True
