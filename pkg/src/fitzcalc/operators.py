"""Multi-valued monotone operators on ``R^n`` and their graph-level tests.

Operators are immutable tagged records (one dataclass per representation).
Value sets and domains come back as :class:`~fitzcalc.polytope.GenPolytope`.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .lpkernel import feasible_point, psd_factor
from .pairing import Bound, Evaluation, PairedPoint, as_vec, pairing_rows, stack_points
from .polytope import GenPolytope, hrep_to_vrep, sample_points
from .probe import BoxProbe, grid_product
from .reports import CheckReport, Verdict

MATCH_TOL = 1e-12
ACTIVE_TOL = 1e-9
MEMBER_TOL = 1e-9


def _matrix(a, shape=None) -> np.ndarray:
    m = np.atleast_2d(np.array(a, dtype=float))
    if shape is not None and m.shape != shape:
        raise ValueError(f"expected a {shape} matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class LinearMapRep:
    """``L : R^n -> R^m`` stored as an ``m x n`` matrix; the adjoint is the transpose."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _matrix(self.matrix))

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def adjoint(self) -> np.ndarray:
        return self.matrix.T

    def apply(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)

    def apply_adjoint(self, ystar) -> np.ndarray:
        return self.matrix.T @ np.asarray(ystar, dtype=float)


class OperatorRep:
    """Base class of the operator representations."""

    dim: int


@dataclass(frozen=True, eq=False)
class FiniteGraph(OperatorRep):
    """A finite set of graph points, stored as stacked ``xs`` / ``xstars`` rows."""

    xs: np.ndarray
    xstars: np.ndarray

    def __post_init__(self):
        xs = np.atleast_2d(np.array(self.xs, dtype=float))
        xstars = np.atleast_2d(np.array(self.xstars, dtype=float))
        if xs.shape != xstars.shape or xs.shape[0] == 0:
            raise ValueError("a finite graph needs matching, non-empty point arrays")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(xstars))):
            raise ValueError("graph points must be finite")
        xs.setflags(write=False)
        xstars.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "xstars", xstars)

    @classmethod
    def from_points(cls, points: Sequence[PairedPoint]) -> "FiniteGraph":
        arr = stack_points(points)
        n = arr.shape[1] // 2
        return cls(arr[:, :n], arr[:, n:])

    @classmethod
    def from_array(cls, arr) -> "FiniteGraph":
        arr = np.atleast_2d(np.asarray(arr, dtype=float))
        n = arr.shape[1] // 2
        return cls(arr[:, :n], arr[:, n:])

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def __len__(self):
        return self.xs.shape[0]

    @property
    def points(self) -> list[PairedPoint]:
        return [PairedPoint(x, s) for x, s in zip(self.xs, self.xstars)]

    def as_array(self) -> np.ndarray:
        return np.hstack([self.xs, self.xstars])


@dataclass(frozen=True, eq=False)
class AffineMonotone(OperatorRep):
    """``x -> {M x + q}`` on all of ``R^n``; the symmetric part of ``M`` must be PSD."""

    M: np.ndarray
    q: Optional[np.ndarray] = None

    def __post_init__(self):
        M = _matrix(self.M)
        n = M.shape[0]
        if M.shape != (n, n):
            raise ValueError("M must be square")
        q = as_vec(np.zeros(n) if self.q is None else self.q, n)
        if np.linalg.eigvalsh((M + M.T) / 2).min() < -1e-9:
            raise ValueError("AffineMonotone needs a positive semidefinite symmetric part")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "q", q)

    @property
    def dim(self) -> int:
        return self.M.shape[0]


@dataclass(frozen=True, eq=False)
class SkewLinear(OperatorRep):
    """``x -> {B x}`` with ``B + B^T = 0``."""

    B: np.ndarray

    def __post_init__(self):
        B = _matrix(self.B)
        if B.shape[0] != B.shape[1]:
            raise ValueError("B must be square")
        if np.abs(B + B.T).max() > 1e-12:
            raise ValueError("SkewLinear needs B + B^T = 0")
        object.__setattr__(self, "B", B)

    @property
    def dim(self) -> int:
        return self.B.shape[0]


@dataclass(frozen=True, eq=False)
class SubdiffPL(OperatorRep):
    """Subdifferential of ``f(x) = max_i <slopes[i], x> + offsets[i]``."""

    slopes: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        A = _matrix(self.slopes)
        b = as_vec(self.offsets, A.shape[0])
        object.__setattr__(self, "slopes", A)
        object.__setattr__(self, "offsets", b)

    @classmethod
    def from_pieces(cls, pieces) -> "SubdiffPL":
        return cls([a for a, _ in pieces], [b for _, b in pieces])

    @property
    def dim(self) -> int:
        return self.slopes.shape[1]

    def value(self, x) -> float:
        return float((self.slopes @ np.asarray(x, dtype=float) + self.offsets).max())


@dataclass(frozen=True, eq=False)
class NormalCone(OperatorRep):
    """Normal cone operator of ``C = {x : G x <= c}`` (``C`` must be non-empty)."""

    G: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        G = _matrix(self.G)
        c = as_vec(self.c, G.shape[0])
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "c", c)
        if feasible_point(A_ub=G, b_ub=c, n=G.shape[1]) is None:
            raise ValueError("NormalCone needs a non-empty set C")

    @classmethod
    def interval(cls, a: float, b: float) -> "NormalCone":
        return cls([[1.0], [-1.0]], [b, -a])

    @classmethod
    def box(cls, lo, hi) -> "NormalCone":
        lo, hi = np.ravel(lo), np.ravel(hi)
        eye = np.eye(lo.size)
        return cls(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @property
    def dim(self) -> int:
        return self.G.shape[1]


@dataclass(frozen=True, eq=False)
class Sum(OperatorRep):
    left: OperatorRep
    right: OperatorRep

    def __post_init__(self):
        if self.left.dim != self.right.dim:
            raise ValueError("summands must act on the same space")

    @property
    def dim(self) -> int:
        return self.left.dim


@dataclass(frozen=True, eq=False)
class Product(OperatorRep):
    """``M(x1, x2) = left(x1) x right(x2)`` on ``R^(n1 + n2)``."""

    left: OperatorRep
    right: OperatorRep

    @property
    def dim(self) -> int:
        return self.left.dim + self.right.dim


@dataclass(frozen=True, eq=False)
class Precomp(OperatorRep):
    """``T = L^* inner L``."""

    L: LinearMapRep
    inner: OperatorRep

    def __post_init__(self):
        if self.L.out_dim != self.inner.dim:
            raise ValueError("L codomain must match the inner operator's dimension")

    @property
    def dim(self) -> int:
        return self.L.in_dim


Operator = Union[FiniteGraph, AffineMonotone, SkewLinear, SubdiffPL, NormalCone, Sum, Product,
                 Precomp]


def identity_map(n: int = 1) -> AffineMonotone:
    return AffineMonotone(np.eye(n))


def abs_subdiff() -> SubdiffPL:
    """``d|t|`` on the real line."""
    return SubdiffPL([[1.0], [-1.0]], [0.0, 0.0])


def l1_subdiff(n: int) -> SubdiffPL:
    """``d||x||_1`` on ``R^n`` as the max of the ``2^n`` sign patterns."""
    signs = np.array(list(itertools.product([1.0, -1.0], repeat=n)))
    return SubdiffPL(signs, np.zeros(len(signs)))


# -- evaluation ---------------------------------------------------------------

def _check_dim(op: OperatorRep, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != op.dim:
        raise ValueError(f"operator acts on R^{op.dim}, got a point of R^{x.size}")
    return x


def evaluate(op: OperatorRep, x) -> GenPolytope:
    """The value set ``op(x)`` (``GenPolytope.empty_set`` outside the domain)."""
    x = _check_dim(op, x)
    n = op.dim
    if isinstance(op, FiniteGraph):
        hit = np.abs(op.xs - x).max(axis=1) <= MATCH_TOL
        if not hit.any():
            return GenPolytope.empty_set(n)
        return GenPolytope(op.xstars[hit], np.zeros((0, n)), n)
    if isinstance(op, AffineMonotone):
        return GenPolytope((op.M @ x + op.q)[None, :], np.zeros((0, n)), n)
    if isinstance(op, SkewLinear):
        return GenPolytope((op.B @ x)[None, :], np.zeros((0, n)), n)
    if isinstance(op, SubdiffPL):
        vals = op.slopes @ x + op.offsets
        active = vals >= vals.max() - ACTIVE_TOL
        return GenPolytope(op.slopes[active], np.zeros((0, n)), n)
    if isinstance(op, NormalCone):
        gx = op.G @ x
        if np.any(gx > op.c + MEMBER_TOL):
            return GenPolytope.empty_set(n)
        active = np.abs(gx - op.c) <= MEMBER_TOL
        return GenPolytope.cone(op.G[active], n)
    if isinstance(op, Sum):
        left = evaluate(op.left, x)
        if left.empty:
            return left
        return left.minkowski_sum(evaluate(op.right, x))
    if isinstance(op, Product):
        k = op.left.dim
        return evaluate(op.left, x[:k]).product(evaluate(op.right, x[k:]))
    if isinstance(op, Precomp):
        inner = evaluate(op.inner, op.L.apply(x))
        return inner.linear_image(op.L.adjoint)
    raise TypeError(f"unknown operator representation {type(op).__name__}")


def in_graph(op: OperatorRep, z: PairedPoint, tol: float = MEMBER_TOL) -> bool:
    values = evaluate(op, z.x)
    return values.contains(z.xstar, tol)


def as_affine(op: OperatorRep) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """``(M, q)`` when ``op`` is single-valued affine on all of ``R^n``, else ``None``."""
    if isinstance(op, AffineMonotone):
        return np.array(op.M), np.array(op.q)
    if isinstance(op, SkewLinear):
        return np.array(op.B), np.zeros(op.dim)
    if isinstance(op, Sum):
        a, b = as_affine(op.left), as_affine(op.right)
        if a is None or b is None:
            return None
        return a[0] + b[0], a[1] + b[1]
    if isinstance(op, Product):
        a, b = as_affine(op.left), as_affine(op.right)
        if a is None or b is None:
            return None
        k, m = op.left.dim, op.right.dim
        M = np.zeros((k + m, k + m))
        M[:k, :k], M[k:, k:] = a[0], b[0]
        return M, np.concatenate([a[1], b[1]])
    if isinstance(op, Precomp):
        a = as_affine(op.inner)
        if a is None:
            return None
        L = op.L.matrix
        return L.T @ a[0] @ L, L.T @ a[1]
    return None


# -- domains ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _Domain:
    """``{x : G x <= c}``, further restricted to ``points`` when that is set."""

    dim: int
    G: np.ndarray
    c: np.ndarray
    points: Optional[np.ndarray] = None

    def member_mask(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        ok = np.ones(X.shape[0], dtype=bool)
        if self.G.shape[0]:
            ok &= np.all(X @ self.G.T <= self.c + MEMBER_TOL, axis=1)
        if self.points is not None:
            near = np.zeros(X.shape[0], dtype=bool)
            for p in self.points:
                near |= np.abs(X - p).max(axis=1) <= MEMBER_TOL
            ok &= near
        return ok

    def finite_points(self) -> Optional[np.ndarray]:
        if self.points is None:
            return None
        return self.points[self.member_mask(self.points)] if len(self.points) else self.points


def _full(n: int) -> _Domain:
    return _Domain(n, np.zeros((0, n)), np.zeros(0))


def _equalities(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.vstack([A, -A]), np.concatenate([b, -b])


def _domain(op: OperatorRep) -> _Domain:
    n = op.dim
    if isinstance(op, FiniteGraph):
        return _Domain(n, np.zeros((0, n)), np.zeros(0), np.unique(op.xs, axis=0))
    if isinstance(op, (AffineMonotone, SkewLinear, SubdiffPL)):
        return _full(n)
    if isinstance(op, NormalCone):
        return _Domain(n, np.array(op.G), np.array(op.c))
    if isinstance(op, Sum):
        a, b = _domain(op.left), _domain(op.right)
        G = np.vstack([a.G, b.G])
        c = np.concatenate([a.c, b.c])
        pts = None
        if a.points is not None and b.points is not None:
            pts = a.points[b.member_mask(a.points)]
        elif a.points is not None:
            pts = a.points
        elif b.points is not None:
            pts = b.points
        return _Domain(n, G, c, pts)
    if isinstance(op, Product):
        a, b = _domain(op.left), _domain(op.right)
        k, m = a.dim, b.dim
        if a.points is not None and b.points is not None:
            pa, pb = a.finite_points(), b.finite_points()
            pts = np.array([np.concatenate([u, v]) for u in pa for v in pb]).reshape(-1, k + m)
            return _Domain(k + m, np.zeros((0, k + m)), np.zeros(0), pts)

        def lift(d: _Domain, offset: int, width: int):
            if d.points is not None:
                pts = d.finite_points()
                if len(pts) != 1:
                    raise ValueError("product of a multi-point domain with a polyhedron "
                                     "is not convex")
                G, c = _equalities(np.eye(width), pts[0])
            else:
                G, c = d.G, d.c
            out = np.zeros((G.shape[0], k + m))
            out[:, offset:offset + width] = G
            return out, c

        Ga, ca = lift(a, 0, k)
        Gb, cb = lift(b, k, m)
        return _Domain(k + m, np.vstack([Ga, Gb]), np.concatenate([ca, cb]))
    if isinstance(op, Precomp):
        d = _domain(op.inner)
        L = op.L.matrix
        G, c = d.G @ L, d.c
        if d.points is None:
            return _Domain(n, G, c)
        pts = d.finite_points()
        if np.linalg.matrix_rank(L) == n:
            pre = np.linalg.lstsq(L, pts.T, rcond=None)[0].T
            ok = np.abs(pre @ L.T - pts).max(axis=1) <= MEMBER_TOL
            return _Domain(n, G, c, pre[ok])
        if len(pts) == 1:
            Ge, ce = _equalities(L, pts[0])
            return _Domain(n, np.vstack([G, Ge]), np.concatenate([c, ce]))
        raise ValueError("preimage of a multi-point domain under a non-injective map "
                         "is not convex")
    raise TypeError(f"unknown operator representation {type(op).__name__}")


def domain(op: OperatorRep) -> GenPolytope:
    """``D(op)`` in vertex/ray form (finite graphs give their finite point set)."""
    d = _domain(op)
    if d.points is not None:
        pts = d.finite_points()
        if len(pts) == 0:
            return GenPolytope.empty_set(op.dim)
        return GenPolytope(pts, np.zeros((0, op.dim)), op.dim)
    if d.G.shape[0] == 0:
        return GenPolytope.whole_space(op.dim)
    return hrep_to_vrep(d.G, d.c, op.dim)


def domain_halfspaces(op: OperatorRep) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """``(G, c)`` with ``D(op) = {G x <= c}``; ``None`` for finite domains."""
    d = _domain(op)
    if d.points is not None:
        return None
    return d.G, d.c


def in_domain(op: OperatorRep, x) -> bool:
    return bool(_domain(op).member_mask(_check_dim(op, x)[None, :])[0])


# -- monotonicity -------------------------------------------------------------

def is_monotone_finite(g: FiniteGraph, tol: float = 1e-9) -> CheckReport:
    """Pairwise test ``p(a1 - a2) >= -tol``; the witness is the worst pair."""
    A = g.as_array()
    n = g.dim
    worst, pair = math.inf, None
    for start in range(0, len(A), 512):
        block = A[start:start + 512]
        D = block[:, None, :] - A[None, :, :]
        P = np.einsum("ijk,ijk->ij", D[:, :, :n], D[:, :, n:])
        i, j = np.unravel_index(np.argmin(P), P.shape)
        if P[i, j] < worst:
            worst, pair = float(P[i, j]), (start + int(i), int(j))
    if len(A) < 2:
        worst = 0.0
    details = {"points": len(A), "min_pair_coupling": worst}
    if worst >= -tol:
        return CheckReport("monotone", Verdict.HOLDS, details=details, tolerances={"tol": tol})
    i, j = sorted(pair)
    witness = tuple(A[i]) + tuple(A[j])
    return CheckReport("monotone", Verdict.FAILS, witness=witness, details=details,
                       tolerances={"tol": tol})


# -- discretization -----------------------------------------------------------

def _single_values(op: OperatorRep, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows of ``X`` (all inside the domain) where ``op`` is single-valued, with the value.

    A vectorized shortcut for :func:`evaluate`; rows it cannot decide are
    reported as not single-valued and go through the general path.
    """
    N, n = X.shape
    if isinstance(op, AffineMonotone):
        return np.ones(N, dtype=bool), X @ op.M.T + op.q
    if isinstance(op, SkewLinear):
        return np.ones(N, dtype=bool), X @ op.B.T
    if isinstance(op, SubdiffPL):
        vals = X @ op.slopes.T + op.offsets
        active = vals >= vals.max(axis=1, keepdims=True) - ACTIVE_TOL
        return active.sum(axis=1) == 1, op.slopes[np.argmax(active, axis=1)]
    if isinstance(op, NormalCone):
        inner = np.all(X @ op.G.T < op.c - MEMBER_TOL, axis=1) if op.G.shape[0] \
            else np.ones(N, dtype=bool)
        return inner, np.zeros((N, n))
    if isinstance(op, Sum):
        a, va = _single_values(op.left, X)
        b, vb = _single_values(op.right, X)
        return a & b, va + vb
    if isinstance(op, Product):
        k = op.left.dim
        a, va = _single_values(op.left, X[:, :k])
        b, vb = _single_values(op.right, X[:, k:])
        return a & b, np.hstack([va, vb])
    if isinstance(op, Precomp):
        L = op.L.matrix
        a, va = _single_values(op.inner, X @ L.T)
        return a, va @ L
    return np.zeros(N, dtype=bool), np.zeros((N, n))


@functools.lru_cache(maxsize=64)
def _discretize(op: OperatorRep, probe: BoxProbe, clip: bool = True) -> np.ndarray:
    n = op.dim
    if probe.n != n:
        raise ValueError(f"probe is for R^{probe.n}, operator acts on R^{n}")
    xlo, xhi = probe.x_lo, probe.x_hi
    d = _domain(op)
    if d.points is not None:
        X = d.finite_points()
        X = X[np.all((X >= xlo - 1e-12) & (X <= xhi + 1e-12), axis=1)]
    else:
        X = grid_product(probe.x_axes())
        X = X[d.member_mask(X)] if len(X) else X
        if d.G.shape[0]:
            V = domain(op).vertices
            V = V[np.all((V >= xlo - 1e-12) & (V <= xhi + 1e-12), axis=1)]
            X = np.vstack([X, V])
    affine = as_affine(op)
    rows = []
    if affine is not None:
        XS = X @ affine[0].T + affine[1]
        keep = np.all((XS >= probe.xstar_lo - 1e-12) & (XS <= probe.xstar_hi + 1e-12), axis=1)
        if not clip:
            keep[:] = True
        rows.append(np.hstack([X[keep], XS[keep]]))
    else:
        single, vals = _single_values(op, X)
        if single.any():
            keep = single.copy()
            if clip:
                keep[single] = np.all((vals[single] >= probe.xstar_lo - 1e-12)
                                      & (vals[single] <= probe.xstar_hi + 1e-12), axis=1)
            rows.append(np.hstack([X[keep], vals[keep]]))
        for x in X[~single]:
            P = evaluate(op, x)
            if P.empty:
                continue
            lo, hi = probe.xstar_lo, probe.xstar_hi
            if not clip and P.bounded:
                # widen the window on the probe grid so the whole value set is kept
                r = probe.resolution
                lo = np.minimum(lo, lo + r * np.floor((P.vertices.min(axis=0) - lo) / r))
                hi = np.maximum(hi, P.vertices.max(axis=0))
            pts = sample_points(P, lo, hi, probe.resolution)
            if len(pts):
                rows.append(np.hstack([np.broadcast_to(x, (len(pts), n)), pts]))
    if not rows:
        return np.zeros((0, 2 * n))
    out = np.vstack(rows)
    keys = np.round(out, 10) + 0.0
    _, idx = np.unique(keys, axis=0, return_index=True)
    out = out[np.sort(idx)]
    out.setflags(write=False)
    return out


def discretize_graph(op: OperatorRep, probe: BoxProbe) -> FiniteGraph:
    """Finite subgraph of ``op`` sampled on the probe grid and truncated to the box.

    Grid points of the primal box that lie in ``D(op)`` (plus the vertices of
    a polyhedral domain) are paired with grid samples of the value set; a
    finite domain is used as is. Every returned point lies on the graph.
    """
    if isinstance(op, FiniteGraph):
        A = op.as_array()
        keep = probe.contains(A)
        if not keep.any():
            raise ValueError("finite graph has no point inside the probe box")
        return FiniteGraph.from_array(A[keep])
    arr = _discretize(op, probe)
    if len(arr) == 0:
        raise ValueError("operator graph has no sample inside the probe box")
    return FiniteGraph.from_array(arr)


def graph_samples(op: OperatorRep, probe: BoxProbe) -> tuple[np.ndarray, bool]:
    """Graph points used by the scanning checks, and whether they are the full graph.

    Finite graphs are used whole. Other operators are sampled on the probe box
    padded by its own half-width so that scans near the box edge still see the
    graph just outside it; bounded value sets are kept whole, so the samples
    of ``A + B`` for a single-valued ``B`` are exactly the shifted samples of
    ``A`` whenever ``B`` maps grid points to grid points.
    """
    if isinstance(op, FiniteGraph):
        return op.as_array(), True
    return _discretize(op, probe.padded(), False), False


# -- the inf_{a in A} p(z - a) term ---------------------------------------------

class _AffineForms:
    """Closed forms for ``x -> M x + q`` used on stacked rows of ``Z``.

    With ``S`` the symmetric part of ``M`` and ``v = x* + M^T x - q``:
    ``h(z) = v^T S^+ v / 4 + <x, q>`` and
    ``inf_a p(z - a) = <x, x* - q> - v^T S^+ v / 4`` when ``v`` is in
    ``range(S)``; otherwise ``h = +inf`` and the infimum is ``-inf``.
    """

    def __init__(self, M, q):
        self.M = np.asarray(M, dtype=float)
        self.q = np.asarray(q, dtype=float)
        n = self.M.shape[0]
        self.n = n
        self.R, self.P0 = psd_factor((self.M + self.M.T) / 2)
        Wv = np.vstack([self.M, np.eye(n)])  # v = Z @ Wv - q
        self.Wv = Wv
        self.WR, self.qR = Wv @ self.R, self.q @ self.R
        self.WP, self.qP = Wv @ self.P0, self.q @ self.P0
        K = np.vstack([np.eye(n), self.M])
        self.graph_proj = np.eye(2 * n) - K @ np.linalg.pinv(K)
        self.shift = np.concatenate([np.zeros(n), self.q])
        # both functions as z^T H z + g.z + c (used when S is invertible)
        J = np.zeros((2 * n, 2 * n))
        J[:n, n:] = J[n:, :n] = 0.5 * np.eye(n)
        Q = self.WR @ self.WR.T
        lin = self.WR @ self.qR
        cst = float(self.qR @ self.qR)
        qx = np.concatenate([self.q, np.zeros(n)])
        self.fitz_quad = (0.25 * Q, -0.5 * lin + qx, 0.25 * cst)
        self.inf_quad = (J - 0.25 * Q, 0.5 * lin - qx, -0.25 * cst)

    @staticmethod
    def _form(Z, form):
        H, g, c = form
        return np.einsum("ij,ij->i", Z @ H, Z) + (Z @ g + c)

    def quad(self, Z):
        """``(v^T S^+ v, v in range(S))`` row-wise."""
        W = Z @ self.WR - self.qR
        q = np.einsum("ij,ij->i", W, W)
        if self.P0.shape[1]:
            off = Z @ self.WP - self.qP
            V = Z @ self.Wv - self.q
            ok = np.einsum("ij,ij->i", off, off) <= (1e-8 * np.sqrt(np.einsum("ij,ij->i", V, V))
                                                      + 1e-12) ** 2
        else:
            ok = np.ones(Z.shape[0], dtype=bool)
        return q, ok

    def related_inf(self, Z):
        if not self.P0.shape[1]:
            return self._form(Z, self.inf_quad)
        n = self.n
        quad, ok = self.quad(Z)
        base = np.einsum("ij,ij->i", Z[:, :n], Z[:, n:]) - Z[:, :n] @ self.q
        return np.where(ok, base - quad / 4.0, -math.inf)

    def fitzpatrick(self, Z):
        if not self.P0.shape[1]:
            return self._form(Z, self.fitz_quad)
        quad, ok = self.quad(Z)
        return np.where(ok, quad / 4.0 + Z[:, :self.n] @ self.q, math.inf)

    def graph_distance(self, Z):
        E = (Z - self.shift) @ self.graph_proj.T
        return np.sqrt(np.einsum("ij,ij->i", E, E))


def _affine_forms(op: OperatorRep) -> Optional[_AffineForms]:
    a = as_affine(op)
    return None if a is None else _AffineForms(*a)


def _min_coupling(Z: np.ndarray, S: np.ndarray, block: int = 1 << 22) -> np.ndarray:
    """Row-wise ``min_a p(z - a)`` over all sample rows ``a``."""
    n = Z.shape[1] // 2
    # p(z - a) = p(z) - z.a + p(a) locates the minimizer
    pa = pairing_rows(S)
    out = np.full(Z.shape[0], math.inf)
    step = max(1, block // max(1, len(S)))
    Sx, Ss = S[:, :n], S[:, n:]
    for i in range(0, Z.shape[0], step):
        Zc = Z[i:i + step]
        cross = Zc[:, n:] @ Sx.T + Zc[:, :n] @ Ss.T
        best = (pa[None, :] - cross).argmin(axis=1)
        # re-evaluate the minimizer without cancellation (exact 0 on the graph)
        D = Zc - S[best]
        out[i:i + step] = np.einsum("ij,ij->i", D[:, :n], D[:, n:])
    return out


def related_inf_rows(op: OperatorRep, Z: np.ndarray, probe: BoxProbe) -> tuple[np.ndarray, Bound]:
    """Vectorized ``inf_{a in op} p(z - a)`` for the rows of ``Z``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    forms = None if isinstance(op, FiniteGraph) else _affine_forms(op)
    if forms is not None:
        return forms.related_inf(Z), Bound.EXACT
    S, exact = graph_samples(op, probe)
    if len(S) == 0:
        raise ValueError("operator has an empty graph")
    return _min_coupling(Z, S), Bound.EXACT if exact else Bound.UPPER


def monotone_related_inf(op: OperatorRep, z: PairedPoint, probe: Optional[BoxProbe] = None
                         ) -> Evaluation:
    """``inf_{a in op} p(z - a)``.

    Exact for finite graphs and affine operators (``-inf`` happens for affine
    operators with a singular symmetric part); otherwise the minimum over a
    discretized graph, which is an upper bound on the true infimum.
    """
    if z.dim != op.dim:
        raise ValueError("point and operator dimensions differ")
    probe = probe or BoxProbe.cube(op.dim)
    vals, bound = related_inf_rows(op, z.as_array()[None, :], probe)
    return Evaluation(float(vals[0]), bound, None if bound is Bound.EXACT else probe.resolution)


# -- maximality scan ----------------------------------------------------------

class _CandidateTable:
    """For every grid value of ``s = x + x*``, graph samples with nearby ``u + u*``.

    For a maximal operator the sample ``a`` whose ``u + u*`` matches ``s``
    makes ``p(z - a) = -|x - u|^2``, so these few candidates usually certify
    that ``z`` is not monotonically related to the graph.
    """

    def __init__(self, S: np.ndarray, probe: BoxProbe, k: int = 4):
        n = probe.n
        self.n = n
        self.res = probe.resolution
        self.s0 = probe.x_lo + probe.xstar_lo
        self.counts = np.array([ax.size for ax in probe.x_axes()]) + \
            np.array([ax.size for ax in probe.xstar_axes()]) - 1
        grids = [self.s0[i] + self.res * np.arange(self.counts[i]) for i in range(n)]
        svals = grid_product(grids)
        tree = cKDTree(S[:, :n] + S[:, n:])
        k = min(k, len(S))
        _, idx = tree.query(svals, k=k)
        self.table = np.asarray(idx).reshape(len(svals), k)
        self.S = S

    def uncertified(self, Z: np.ndarray, tol: float) -> np.ndarray:
        """Rows of ``Z`` for which no candidate gives ``p(z - a) < -tol``."""
        n = self.n
        s = Z[:, :n] + Z[:, n:]
        ij = np.rint((s - self.s0) / self.res).astype(np.int64)
        np.clip(ij, 0, self.counts - 1, out=ij)
        flat = np.ravel_multi_index(ij.T, tuple(self.counts))
        idx = np.arange(Z.shape[0])
        for j in range(self.table.shape[1]):
            D = Z[idx] - self.S[self.table[flat[idx], j]]
            idx = idx[np.einsum("ij,ij->i", D[:, :n], D[:, n:]) >= -tol]
            if idx.size == 0:
                break
        return idx


def maximality_probe(op: OperatorRep, probe: Optional[BoxProbe] = None) -> CheckReport:
    """Search the probe grid for a point far from the graph that is monotonically
    related to all of it.

    A witness refutes maximality. With exact infima (finite graphs, affine
    operators) it is reported as ``FAILS``; from a discretized graph the
    infimum is only an upper bound, so the verdict is ``POSSIBLE_FAIL``.
    Without a witness the verdict is ``HOLDS_AT_RESOLUTION``.
    """
    probe = probe or BoxProbe.cube(op.dim)
    tol, res = probe.tol, probe.resolution
    far = 10.0 * res
    forms = None if isinstance(op, FiniteGraph) else _affine_forms(op)
    scanned = 0
    tolerances = {"tol": tol, "resolution": res, "distance": far}
    if forms is not None:
        exact = True
        for Z in probe.chunks(1 << 20):
            scanned += len(Z)
            inf = forms.related_inf(Z)
            idx = np.flatnonzero(inf >= -tol)
            if idx.size:
                idx = idx[forms.graph_distance(Z[idx]) > far]
            if idx.size:
                return _max_witness(Z[idx[0]], float(inf[idx[0]]), True, scanned, tolerances)
    else:
        S, exact = graph_samples(op, probe)
        if len(S) == 0:
            raise ValueError("operator has an empty graph")
        table = _CandidateTable(S, probe)
        tree = cKDTree(S)
        for Z in probe.chunks(1 << 20):
            scanned += len(Z)
            idx = table.uncertified(Z, tol)
            if idx.size == 0:
                continue
            dist, _ = tree.query(Z[idx], k=1, distance_upper_bound=far * (1 + 1e-9))
            idx = idx[np.isinf(dist)]
            if idx.size == 0:
                continue
            inf = _min_coupling(Z[idx], S)
            bad = inf >= -tol
            if bad.any():
                first = int(np.argmax(bad))
                return _max_witness(Z[idx[first]], float(inf[first]), exact, scanned, tolerances)
    return CheckReport("maximal-probe", Verdict.HOLDS_AT_RESOLUTION,
                       details={"grid_points": scanned, "exact_infimum": exact},
                       tolerances=tolerances)


def _max_witness(z, inf, exact, scanned, tolerances) -> CheckReport:
    verdict = Verdict.FAILS if exact else Verdict.POSSIBLE_FAIL
    return CheckReport("maximal-probe", verdict, witness=tuple(float(v) for v in z),
                       details={"grid_points": scanned, "related_inf": inf,
                                "exact_infimum": exact},
                       tolerances=tolerances)
