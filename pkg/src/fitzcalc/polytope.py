"""Convex sets in vertex/ray form and the LP tests built on them.

A :class:`GenPolytope` is ``conv(vertices) + cone(rays)``. Halfspace form
``{x : G x <= c}`` only appears as input and is converted with
:func:`hrep_to_vrep` (brute-force active-set enumeration, fine for the small
dimensions used here).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull

from .lpkernel import LinearProgram, null_space, solve_lp
from .probe import grid_product

MEMBER_TOL = 1e-9


def _rows(a, n: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((0, n))
    return a.reshape(-1, n)


def _unique_rows(a: np.ndarray, decimals: int = 10) -> np.ndarray:
    if a.shape[0] <= 1:
        return a
    keys = np.round(a, decimals) + 0.0  # drops -0.0
    _, idx = np.unique(keys, axis=0, return_index=True)
    return a[np.sort(idx)]


def _normalize_rays(rays: np.ndarray) -> np.ndarray:
    if rays.shape[0] == 0:
        return rays
    norms = np.linalg.norm(rays, axis=1)
    keep = norms > 1e-12
    rays = rays[keep] / norms[keep, None]
    return _unique_rows(rays)


@dataclass(frozen=True, eq=False)
class GenPolytope:
    """``conv(vertices) + cone(rays)`` in ``R^dim``; ``empty`` flags the empty set."""

    vertices: np.ndarray
    rays: np.ndarray
    dim: int
    empty: bool = False

    def __post_init__(self):
        n = int(self.dim)
        V = _rows(self.vertices, n)
        R = _normalize_rays(_rows(self.rays, n))
        if not self.empty and V.shape[0] == 0:
            raise ValueError("a non-empty polytope needs at least one vertex")
        if not (np.all(np.isfinite(V)) and np.all(np.isfinite(R))):
            raise ValueError("vertices and rays must be finite")
        V = _unique_rows(V)
        V.setflags(write=False)
        R.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "rays", R)

    # -- constructors ---------------------------------------------------
    @classmethod
    def of(cls, vertices, rays=(), dim: Optional[int] = None) -> "GenPolytope":
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if dim is None:
            dim = V.shape[1]
        return cls(V, np.asarray(rays, dtype=float), dim)

    @classmethod
    def empty_set(cls, dim: int) -> "GenPolytope":
        return cls(np.zeros((0, dim)), np.zeros((0, dim)), dim, empty=True)

    @classmethod
    def whole_space(cls, dim: int) -> "GenPolytope":
        eye = np.eye(dim)
        return cls(np.zeros((1, dim)), np.vstack([eye, -eye]), dim)

    @classmethod
    def cone(cls, rays, dim: int) -> "GenPolytope":
        return cls(np.zeros((1, dim)), _rows(rays, dim), dim)

    # -- basic queries --------------------------------------------------
    @property
    def bounded(self) -> bool:
        return self.rays.shape[0] == 0

    @property
    def is_cone(self) -> bool:
        return (not self.empty and self.vertices.shape[0] == 1
                and np.abs(self.vertices[0]).max(initial=0.0) <= 1e-12)

    def generators(self) -> np.ndarray:
        return np.vstack([self.vertices, self.rays])

    def affine_hull_dim(self) -> int:
        if self.empty:
            return -1
        D = np.vstack([self.vertices[1:] - self.vertices[0], self.rays])
        if D.shape[0] == 0:
            return 0
        return int(np.linalg.matrix_rank(D, tol=1e-9))

    def support(self, d) -> float:
        """``sup {<d, y> : y in P}``; ``-inf`` for the empty set."""
        d = np.asarray(d, dtype=float)
        if self.empty:
            return -math.inf
        if self.rays.shape[0] and (self.rays @ d).max() > 1e-12:
            return math.inf
        return float((self.vertices @ d).max())

    def support_many(self, D: np.ndarray) -> np.ndarray:
        return np.array([self.support(d) for d in np.atleast_2d(D)])

    def contains(self, y, tol: float = MEMBER_TOL) -> bool:
        """LP membership test ``y in conv(V) + cone(R)``."""
        if self.empty:
            return False
        y = np.asarray(y, dtype=float)
        if self.bounded and self.vertices.shape[0] == 1:
            return bool(np.abs(self.vertices[0] - y).max() <= tol)
        return _combination_feasible(self.vertices, self.rays, y, tol)

    # -- constructions --------------------------------------------------
    def minkowski_sum(self, other: "GenPolytope") -> "GenPolytope":
        if self.empty or other.empty:
            return GenPolytope.empty_set(self.dim)
        V = (self.vertices[:, None, :] + other.vertices[None, :, :]).reshape(-1, self.dim)
        return GenPolytope(V, np.vstack([self.rays, other.rays]), self.dim)

    def linear_image(self, matrix) -> "GenPolytope":
        """Image under ``y -> matrix @ y``."""
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        if self.empty:
            return GenPolytope.empty_set(A.shape[0])
        return GenPolytope(self.vertices @ A.T, self.rays @ A.T, A.shape[0])

    def translate(self, v) -> "GenPolytope":
        if self.empty:
            return self
        return GenPolytope(self.vertices + np.asarray(v, dtype=float), self.rays, self.dim)

    def negate(self) -> "GenPolytope":
        if self.empty:
            return self
        return GenPolytope(-self.vertices, -self.rays, self.dim)

    def product(self, other: "GenPolytope") -> "GenPolytope":
        n, m = self.dim, other.dim
        if self.empty or other.empty:
            return GenPolytope.empty_set(n + m)
        V = np.array([np.concatenate([u, v]) for u in self.vertices for v in other.vertices])
        R = np.vstack([np.hstack([self.rays, np.zeros((self.rays.shape[0], m))]),
                       np.hstack([np.zeros((other.rays.shape[0], n)), other.rays])])
        return GenPolytope(V, R, n + m)

    def pruned(self) -> "GenPolytope":
        """Drop vertices that are combinations of the remaining generators."""
        if self.empty or self.vertices.shape[0] <= 1:
            return self
        V = self.vertices
        keep = list(range(V.shape[0]))
        for i in range(V.shape[0]):
            others = [j for j in keep if j != i]
            if others and _combination_feasible(V[others], self.rays, V[i], 1e-10):
                keep = others
        return GenPolytope(V[keep], self.rays, self.dim)

    def __repr__(self):
        if self.empty:
            return f"GenPolytope(EMPTY, dim={self.dim})"
        return (f"GenPolytope(vertices={self.vertices.tolist()}, "
                f"rays={self.rays.tolist()}, dim={self.dim})")


def _combination_feasible(V: np.ndarray, R: np.ndarray, y: np.ndarray, tol: float) -> bool:
    """Is ``y = V.T lam + R.T mu`` with ``lam`` in the simplex and ``mu >= 0``?

    Solved as an L1 residual minimization so the answer is robust to round-off.
    """
    k, r, n = V.shape[0], R.shape[0], y.size
    # variables: lam (k), mu (r), e+ (n), e- (n)
    A_eq = np.zeros((n + 1, k + r + 2 * n))
    A_eq[:n, :k] = V.T
    A_eq[:n, k:k + r] = R.T
    A_eq[:n, k + r:k + r + n] = np.eye(n)
    A_eq[:n, k + r + n:] = -np.eye(n)
    if k:
        A_eq[n, :k] = 1.0
        b_eq = np.concatenate([y, [1.0]])
    else:
        A_eq = A_eq[:n]
        b_eq = y
    c = np.concatenate([np.zeros(k + r), np.ones(2 * n)])
    sol = solve_lp(LinearProgram(c, A_eq, b_eq))
    if not sol.optimal:
        raise ArithmeticError(f"membership LP ended with {sol.status.value}")
    return sol.value <= tol * max(1.0, float(np.abs(y).max(initial=0.0)))


def cone_contains(rays: np.ndarray, g: np.ndarray, tol: float = MEMBER_TOL) -> bool:
    """Is ``g`` a non-negative combination of the rows of ``rays``?"""
    g = np.asarray(g, dtype=float)
    if np.abs(g).max(initial=0.0) <= tol:
        return True
    rays = np.atleast_2d(rays)
    if rays.size == 0:
        return False
    return _combination_feasible(np.zeros((0, g.size)), rays, g, tol)


def hrep_to_vrep(G, c, dim: Optional[int] = None) -> GenPolytope:
    """Convert ``{x : G x <= c}`` into vertex/ray form.

    The lineality space ``ker G`` is split off; vertices and extreme rays of
    the pointed remainder are found by enumerating active constraint sets.
    Lineality directions are returned as ``+-`` basis rays (``+-`` unit vectors
    when the set is the whole space).
    """
    if dim is None:
        dim = np.shape(G)[1]
    G = _rows(G, dim)
    c = np.asarray(c, dtype=float).ravel()
    zero_rows = np.linalg.norm(G, axis=1) <= 1e-14
    if np.any(c[zero_rows] < -1e-12):
        return GenPolytope.empty_set(dim)
    G, c = G[~zero_rows], c[~zero_rows]
    if G.shape[0] == 0:
        return GenPolytope.whole_space(dim)
    scale = np.linalg.norm(G, axis=1)
    G, c = G / scale[:, None], c / scale

    lin = null_space(G)
    if lin.shape[1] == dim:
        return GenPolytope.whole_space(dim)
    # orthonormal basis of the complement of the lineality space
    Q = null_space(lin.T) if lin.shape[1] else np.eye(dim)
    k = Q.shape[1]
    H = G @ Q
    m = H.shape[0]
    tol = 1e-9

    verts = []
    for rows in itertools.combinations(range(m), k):
        sub = H[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        y = np.linalg.solve(sub, c[list(rows)])
        if np.all(H @ y <= c + tol * np.maximum(1.0, np.abs(c))):
            verts.append(y)
    if not verts:
        return GenPolytope.empty_set(dim)

    rays = []
    for rows in itertools.combinations(range(m), k - 1):
        sub = H[list(rows)] if rows else np.zeros((0, k))
        ns = null_space(sub)
        if ns.shape[1] != 1:
            continue
        d = ns[:, 0]
        for s in (1.0, -1.0):
            if np.all(H @ (s * d) <= tol):
                rays.append(s * d)

    V = np.array(verts) @ Q.T
    R = np.array(rays) @ Q.T if rays else np.zeros((0, dim))
    if lin.shape[1]:
        R = np.vstack([R, lin.T, -lin.T])
    return GenPolytope(V, R, dim)


def polar_cone_of_tangents(P: GenPolytope, x) -> GenPolytope:
    """Normal cone ``N_P(x) = {g : <g, y - x> <= 0 for all y in P}`` as a cone."""
    x = np.asarray(x, dtype=float)
    rows = np.vstack([P.vertices - x, P.rays])
    rows = rows[np.linalg.norm(rows, axis=1) > 1e-12]
    return hrep_to_vrep(rows, np.zeros(rows.shape[0]), P.dim)


def cones_equal(C1: GenPolytope, C2: GenPolytope, tol: float = MEMBER_TOL) -> bool:
    if not (C1.is_cone and C2.is_cone):
        raise ValueError("cone_equality expects cones (single vertex at the origin)")
    return (all(cone_contains(C2.rays, g, tol) for g in C1.rays)
            and all(cone_contains(C1.rays, g, tol) for g in C2.rays))


def affine_frame(points: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Base point and orthonormal direction basis (columns) of ``aff(points)``."""
    base = points[0]
    D = points[1:] - base
    if D.shape[0] == 0:
        return base, np.zeros((points.shape[1], 0))
    U, sv, Vt = np.linalg.svd(D, full_matrices=False)
    rank = int(np.sum(sv > tol * max(1.0, sv.max(initial=0.0))))
    return base, Vt[:rank].T.copy()


def sample_points(P: GenPolytope, lo, hi, step: float) -> np.ndarray:
    """Points of ``P`` inside the box ``[lo, hi]`` at grid spacing ``step``.

    Vertices in the box are always included. When the affine hull of ``P`` is
    parallel to a coordinate subspace, samples lie on the global grid
    ``lo + k*step``; otherwise on a grid in an orthonormal frame of the hull.
    Rays are truncated far enough out to cover the box.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = P.dim
    if P.empty:
        return np.zeros((0, n))
    V = P.vertices
    W = V
    if P.rays.shape[0]:
        reach = 2.0 * (np.linalg.norm(hi - lo) + np.abs(V - lo).max() + np.abs(V - hi).max())
        W = np.vstack([V] + [V + reach * r for r in P.rays])
    base, Q = affine_frame(W)
    k = Q.shape[1]
    inbox = lambda X: np.all((X >= lo - 1e-12) & (X <= hi + 1e-12), axis=1)
    out = [V[inbox(V)]]
    if k > 0:
        unit_axes = [i for i in range(n) if np.linalg.norm(Q.T[:, i]) > 1 - 1e-9]
        if len(unit_axes) == k:
            axes = []
            for i in range(n):
                if i in unit_axes:
                    a = max(lo[i], W[:, i].min())
                    b = min(hi[i], W[:, i].max())
                    first = lo[i] + step * math.ceil((a - lo[i]) / step - 1e-9)
                    cnt = int(math.floor((b - first) / step + 1e-9)) + 1
                    axes.append(np.round(first + step * np.arange(max(cnt, 0)), 12))
                else:
                    axes.append(np.array([base[i]]))
            cand = grid_product(axes)
            coords = (cand - base) @ Q
        else:
            T = (W - base) @ Q
            tl, th = T.min(axis=0), T.max(axis=0)
            axes = [tl[i] + step * np.arange(int(math.floor((th[i] - tl[i]) / step + 1e-9)) + 1)
                    for i in range(k)]
            coords = grid_product(axes)
            cand = base + coords @ Q.T
        if cand.shape[0]:
            T = (W - base) @ Q
            inside = _inside_hull(T, coords)
            cand = cand[inside]
            out.append(cand[inbox(cand)])
    pts = np.vstack(out)
    return _unique_rows(pts, 11)


def _inside_hull(T: np.ndarray, Y: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    k = T.shape[1]
    if k == 1:
        return (Y[:, 0] >= T[:, 0].min() - tol) & (Y[:, 0] <= T[:, 0].max() + tol)
    hull = ConvexHull(T)
    eq = hull.equations
    return np.all(Y @ eq[:, :-1].T + eq[:, -1] <= tol * max(1.0, np.abs(T).max()), axis=1)

