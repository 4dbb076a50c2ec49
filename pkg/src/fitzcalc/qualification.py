"""Qualification constraints for the sum and chain rules on polyhedral data.

Relative interiors are decided by linear programs over generator weights.
In ``R^n`` every affine hull is closed, so the relative algebraic interior
and its closed-hull variant coincide.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .lpkernel import LinearProgram, LPStatus, feasible_point, null_space, range_basis, solve_lp
from .operators import (AffineMonotone, LinearMapRep, NormalCone, OperatorRep, Precomp, Product,
                        SkewLinear, SubdiffPL, Sum, _discretize, _domain, as_affine, domain,
                        evaluate)
from .polytope import GenPolytope, cone_contains, cones_equal, hrep_to_vrep, polar_cone_of_tangents
from .probe import BoxProbe
from .representatives import _max_affine
from .reports import CheckReport, Verdict, combine

STRICT_SLACK = 1e-6
RELINT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ConvexSetRep:
    """A non-empty convex set ``conv(vertices) + cone(rays)``."""

    base: GenPolytope

    def __post_init__(self):
        if self.base.empty:
            raise ValueError("convex set representations must be non-empty")

    @classmethod
    def of(cls, vertices, rays=(), dim: Optional[int] = None) -> "ConvexSetRep":
        return cls(GenPolytope.of(vertices, rays, dim))

    @classmethod
    def interval(cls, a: float, b: float) -> "ConvexSetRep":
        return cls.of([[a], [b]])

    @classmethod
    def subspace(cls, basis, dim: int) -> "ConvexSetRep":
        B = np.asarray(basis, dtype=float).reshape(-1, dim)
        return cls(GenPolytope(np.zeros((1, dim)), np.vstack([B, -B]), dim))

    @classmethod
    def from_halfspaces(cls, G, c) -> "ConvexSetRep":
        return cls(hrep_to_vrep(G, c))

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def affine_hull_dim(self) -> int:
        return self.base.affine_hull_dim()

    def product(self, other: "ConvexSetRep") -> "ConvexSetRep":
        return ConvexSetRep(self.base.product(other.base))


def _as_set(S) -> GenPolytope:
    P = S.base if isinstance(S, ConvexSetRep) else S
    if P.empty:
        raise ValueError("the set is empty")
    return P


def minkowski_diff(U, V) -> ConvexSetRep:
    """``U - V`` with redundant generators removed."""
    U, V = _as_set(U), _as_set(V)
    if U.dim != V.dim:
        raise ValueError("sets live in different dimensions")
    return ConvexSetRep(U.minkowski_sum(V.negate()).pruned())


def _positive_weights_lp(V: np.ndarray, R: np.ndarray) -> float:
    """``max t`` with ``sum l v + sum m d = 0``, ``sum l = 1``, ``l, m >= t``, ``t <= 1``."""
    k, r = V.shape[0], R.shape[0]
    n = V.shape[1]
    nv = k + r + 1
    A_eq = np.zeros((n + 1, nv))
    A_eq[:n, :k] = V.T
    A_eq[:n, k:k + r] = R.T
    A_eq[n, :k] = 1.0
    b_eq = np.zeros(n + 1)
    b_eq[n] = 1.0
    A_ub = np.zeros((k + r, nv))
    A_ub[:, :k + r] = -np.eye(k + r)
    A_ub[:, -1] = 1.0
    c = np.zeros(nv)
    c[-1] = -1.0
    bounds = [(None, None)] * (k + r) + [(None, 1.0)]
    sol = solve_lp(LinearProgram(c, A_eq, b_eq, A_ub, np.zeros(k + r), bounds))
    if sol.status is LPStatus.INFEASIBLE:
        return -math.inf
    if not sol.optimal:
        raise ArithmeticError(f"relative-interior LP ended with {sol.status.value}")
    return float(-sol.value)


def relint_contains_zero(S) -> bool:
    """Whether ``0`` is in the relative interior of ``conv(V) + cone(R)``.

    The relative interior is the set of combinations with strictly positive
    weight on every generator, so the test is whether some such combination
    hits ``0``.
    """
    P = _as_set(S)
    return _positive_weights_lp(P.vertices, P.rays) > RELINT_TOL


def relint_contains_zero_ballprobe(S, eps: float = STRICT_SLACK) -> bool:
    """Cross-check of :func:`relint_contains_zero` by membership tests.

    ``0`` must lie in the set, and a step of length ``eps`` along each signed
    basis direction of the affine hull must stay inside it.
    """
    P = _as_set(S)
    if not P.contains(np.zeros(P.dim)):
        return False
    D = np.vstack([P.vertices[1:] - P.vertices[0], P.rays])
    Q = range_basis(D.T) if D.shape[0] else np.zeros((P.dim, 0))
    return all(P.contains(s * eps * q) for q in Q.T for s in (1.0, -1.0))


# -- sum / chain qualification -----------------------------------------------

def _verdict(ok: bool) -> Verdict:
    return Verdict.HOLDS if ok else Verdict.FAILS


def qualification_sum(A: OperatorRep, B: OperatorRep) -> CheckReport:
    """``0`` in the relative interior of ``D(A) - D(B)``."""
    diff = minkowski_diff(domain(A), domain(B))
    ok = relint_contains_zero(diff)
    return CheckReport("qual-sum", _verdict(ok),
                       details={"difference": _set_summary(diff.base)},
                       tolerances={"relint": RELINT_TOL})


def _set_summary(P: GenPolytope) -> dict:
    return {"vertices": P.vertices.tolist(), "rays": P.rays.tolist()}


def _range_set(L: np.ndarray) -> GenPolytope:
    m = L.shape[0]
    Q = range_basis(L)
    return GenPolytope(np.zeros((1, m)), np.vstack([Q.T, -Q.T]) if Q.size else np.zeros((0, m)), m)


def qualification_chain(L: LinearMapRep, M: OperatorRep) -> CheckReport:
    """``0`` in the relative interior of ``R(L) - D(M)``.

    Decided by projecting ``D(M)`` onto the orthogonal complement of
    ``R(L)``; the difference set itself is tested as a cross-check and any
    disagreement is an ``ERROR``.
    """
    Lm = L.matrix
    DM = domain(M)
    if DM.empty:
        raise ValueError("operator has an empty domain")
    perp = null_space(Lm.T)
    if perp.shape[1] == 0:
        projected = True
    else:
        proj = GenPolytope(DM.vertices @ perp, DM.rays @ perp, perp.shape[1])
        projected = relint_contains_zero(proj)
    direct = relint_contains_zero(minkowski_diff(_range_set(Lm), DM))
    details = {"projection": projected, "direct": direct, "complement_dim": perp.shape[1]}
    if projected != direct:
        return CheckReport("qual-chain", Verdict.ERROR, details=details)
    return CheckReport("qual-chain", _verdict(projected), details=details,
                       tolerances={"relint": RELINT_TOL})


# -- interiority families -------------------------------------------------------

_MAXIMAL_CLASSES = (AffineMonotone, SkewLinear, SubdiffPL, NormalCone)


def _hrep(op: OperatorRep):
    """``(G, c, points)`` for the domain; ``points`` is set for finite domains."""
    d = _domain(op)
    if d.points is not None:
        return None, None, d.finite_points()
    return d.G, d.c, None


def _strict_meet(Ga, ca, pa, Gb, cb, pb, n: int) -> bool:
    """Some point of the first set lies strictly inside the second (by ``STRICT_SLACK``)."""
    if pb is not None:
        return False  # finite sets have empty interior
    if pa is not None:
        return bool(np.any(np.all(pa @ Gb.T <= cb - STRICT_SLACK, axis=1))) if Gb.shape[0] \
            else len(pa) > 0
    G = np.vstack([Ga, Gb])
    c = np.concatenate([ca, cb - STRICT_SLACK])
    if G.shape[0] == 0:
        return True
    return feasible_point(A_ub=G, b_ub=c, n=n) is not None


def _contained(Pa: GenPolytope, Gb, cb, pb) -> bool:
    if pb is not None:
        if not Pa.bounded:
            return False
        return all(np.any(np.abs(pb - v).max(axis=1) <= 1e-9) for v in Pa.vertices) and \
            len(Pa.vertices) == 1
    if Gb.shape[0] == 0:
        return True
    ok = np.all(Pa.vertices @ Gb.T <= cb + 1e-9)
    if Pa.rays.shape[0]:
        ok = ok and np.all(Pa.rays @ Gb.T <= 1e-9)
    return bool(ok)


def interiority_checks(A: Optional[OperatorRep], B_or_M: OperatorRep,
                       L: Optional[LinearMapRep] = None, family: str = "gamma") -> CheckReport:
    """Interiority hypotheses for ``A + B`` (``L`` omitted) or ``L^* M L``.

    ``gamma``: ``D(A)`` (or ``R(L)``) meets the interior of ``D(B)``;
    ``delta``: ``D(A)`` (or ``R(L)``) is contained in ``D(B)``;
    ``epsilon``: ``0`` in the relative interior of ``D(A) - D(B)`` (or
    ``R(L) - D(M)``), using ``D(B)`` for the projected Fitzpatrick domain,
    which is only justified for maximal ``B`` with a closed convex domain.
    """
    B = B_or_M
    name = f"interiority-{family}"
    if family not in ("gamma", "delta", "epsilon"):
        raise ValueError(f"unknown interiority family {family!r}")
    if family == "epsilon":
        if not isinstance(B, _MAXIMAL_CLASSES):
            return CheckReport(name, Verdict.INAPPLICABLE,
                               details={"reason": "projected Fitzpatrick domain is only "
                                                  "replaced by D(B) for known maximal classes"})
        sub = qualification_chain(L, B) if L is not None else qualification_sum(A, B)
        return CheckReport(name, sub.verdict, details=sub.details, tolerances=sub.tolerances)
    Gb, cb, pb = _hrep(B)
    if L is not None:
        Lm = L.matrix
        n = Lm.shape[1]
        if family == "gamma":
            if pb is not None:
                ok = False
            elif Gb.shape[0] == 0:
                ok = True
            else:
                ok = feasible_point(A_ub=Gb @ Lm, b_ub=cb - STRICT_SLACK, n=n) is not None
        else:
            ok = _contained(_range_set(Lm), Gb, cb, pb)
        return CheckReport(name, _verdict(ok), tolerances={"strict": STRICT_SLACK})
    Ga, ca, pa = _hrep(A)
    if family == "gamma":
        ok = _strict_meet(Ga, ca, pa, Gb, cb, pb, A.dim)
    else:
        ok = _contained(domain(A), Gb, cb, pb)
    return CheckReport(name, _verdict(ok), tolerances={"strict": STRICT_SLACK})


# -- normal cones -------------------------------------------------------------

def normal_cone_value(G, c, x) -> GenPolytope:
    """``N_C(x)`` for ``C = {G y <= c}``: the cone of the active constraint normals."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    c = np.asarray(c, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    gx = G @ x if G.shape[0] else np.zeros(0)
    if np.any(gx > c + 1e-9):
        raise ValueError("point is not in the set")
    active = np.abs(gx - c) <= 1e-9
    return GenPolytope.cone(G[active], x.size)


def cone_equality(C1: GenPolytope, C2: GenPolytope) -> bool:
    return cones_equal(C1, C2)


def face_samples(G, c) -> np.ndarray:
    """One relative-interior point per non-empty face of ``{G y <= c}``.

    For each subset ``I`` of constraints an LP maximizes the slack of the
    others while forcing ``I`` tight; a positive slack means the face with
    exactly ``I`` active exists.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    c = np.asarray(c, dtype=float).ravel()
    k, n = G.shape
    if k > 12:
        raise ValueError("face enumeration is limited to 12 constraints")
    out = []
    for size in range(k + 1):
        for I in itertools.combinations(range(k), size):
            J = [j for j in range(k) if j not in I]
            cost = np.zeros(n + 1)
            cost[-1] = -1.0
            A_eq = np.hstack([G[list(I)], np.zeros((len(I), 1))]) if I else None
            b_eq = c[list(I)] if I else None
            A_ub = np.hstack([G[J], np.ones((len(J), 1))]) if J else None
            b_ub = c[J] if J else None
            sol = solve_lp(LinearProgram(cost, A_eq, b_eq, A_ub, b_ub,
                                         [(None, None)] * n + [(None, 1.0)]))
            if sol.optimal and (not J or -sol.value > 1e-9):
                out.append(sol.x[:n])
    pts = np.array(out).reshape(-1, n)
    _, idx = np.unique(np.round(pts, 9) + 0.0, axis=0, return_index=True)
    return pts[np.sort(idx)]


def _stack(*hs):
    G = np.vstack([np.atleast_2d(np.asarray(h[0], dtype=float)) for h in hs])
    c = np.concatenate([np.asarray(h[1], dtype=float).ravel() for h in hs])
    return G, c


def ncone_sum_check(CA, CB, samples: Optional[Sequence] = None) -> CheckReport:
    """``N_{CA cap CB}(x) = N_CA(x) + N_CB(x)`` at every sample.

    The left side is computed from the vertex form of the intersection (polar
    of its tangent cone), the right side from active constraint normals.
    """
    G, c = _stack(CA, CB)
    n = G.shape[1]
    if feasible_point(A_ub=G, b_ub=c, n=n) is None:
        raise ValueError("the sets do not intersect")
    P = hrep_to_vrep(G, c, n)
    X = face_samples(G, c) if samples is None else np.atleast_2d(np.asarray(samples, dtype=float))
    for x in X:
        left = polar_cone_of_tangents(P, x)
        right = normal_cone_value(*CA, x).minkowski_sum(normal_cone_value(*CB, x))
        if not cone_equality(left, right):
            return CheckReport("ncone-sum", Verdict.FAILS, witness=tuple(float(v) for v in x),
                               details={"left_rays": left.rays.tolist(),
                                        "right_rays": right.rays.tolist()})
    return CheckReport("ncone-sum", Verdict.HOLDS, details={"samples": len(X)})


def ncone_chain_check(L: LinearMapRep, CM, samples: Optional[Sequence] = None) -> CheckReport:
    """``N_{L^-1 CM}(x) = L^* N_CM(Lx)`` at every sample."""
    Lm = L.matrix
    G, c = _stack(CM)
    GL = G @ Lm
    n = Lm.shape[1]
    if feasible_point(A_ub=GL, b_ub=c, n=n) is None:
        raise ValueError("the preimage is empty")
    P = hrep_to_vrep(GL, c, n)
    X = face_samples(GL, c) if samples is None else np.atleast_2d(np.asarray(samples, dtype=float))
    for x in X:
        left = polar_cone_of_tangents(P, x)
        right = normal_cone_value(G, c, Lm @ x).linear_image(Lm.T)
        if not cone_equality(left, right):
            return CheckReport("ncone-chain", Verdict.FAILS, witness=tuple(float(v) for v in x),
                               details={"left_rays": left.rays.tolist(),
                                        "right_rays": right.rays.tolist()})
    return CheckReport("ncone-chain", Verdict.HOLDS, details={"samples": len(X)})


# -- domain invariance --------------------------------------------------------

def _support_equal(P: GenPolytope, Q: GenPolytope, D: np.ndarray, tol: float = 1e-9) -> bool:
    for d in D:
        a, b = P.support(d), Q.support(d)
        if math.isinf(a) or math.isinf(b):
            if a != b:
                return False
        elif abs(a - b) > tol * max(1.0, abs(a)):
            return False
    return True


def _domain_hrep(M: OperatorRep) -> tuple[np.ndarray, np.ndarray]:
    G, c, pts = _hrep(M)
    if pts is None:
        return G, c
    if len(pts) != 1:
        raise ValueError("domain is a finite set with more than one point, not convex")
    n = pts.shape[1]
    return np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([pts[0], -pts[0]])


def domain_invariance_check(M: OperatorRep, samples: Optional[Sequence] = None,
                            probe: Optional[BoxProbe] = None, seed: int = 0) -> CheckReport:
    """``M(x) = M(x) + N_{D(M)}(x)`` on samples, and ``P D(h_M)`` inside ``D(M)``.

    The value-set identity is compared through support functions in 16
    random directions. The domain part scans the probe grid: wherever ``h_M``
    is finite the primal coordinate must lie within ``10*resolution`` of
    ``D(M)``. Finiteness is exact for affine operators; for sampled graphs a
    value that keeps growing when the sampling window is doubled counts as
    infinite.
    """
    G, c = _domain_hrep(M)
    n = M.dim
    rng = np.random.default_rng(seed)
    D = rng.normal(size=(16, n))
    X = face_samples(G, c) if samples is None else np.atleast_2d(np.asarray(samples, dtype=float))
    parts = []
    bad = None
    for x in X:
        val = evaluate(M, x)
        grown = val.minkowski_sum(normal_cone_value(G, c, x))
        if not _support_equal(val, grown, D):
            bad = x
            break
    parts.append(CheckReport("value-invariance", _verdict(bad is None),
                             witness=None if bad is None else tuple(float(v) for v in bad),
                             details={"samples": len(X)}, tolerances={"support": 1e-9}))
    if probe is not None and G.shape[0]:
        parts.append(_fitzpatrick_domain_probe(M, G, c, probe))
    return combine("domain-invariance", parts)


def _fitzpatrick_domain_probe(M, G, c, probe: BoxProbe) -> CheckReport:
    far = 10.0 * probe.resolution
    n = M.dim
    norms = np.maximum(np.linalg.norm(G, axis=1), 1e-300)
    aff = as_affine(M)
    if aff is not None:
        return CheckReport("fitzpatrick-domain", Verdict.HOLDS, details={"closed_form": True})
    base = probe.padded()
    steps = int(round((base.hi[0] - probe.hi[0]) / probe.resolution))
    S1 = _discretize(M, base, False)
    S2 = _discretize(M, probe.padded(2 * steps), False)
    worst = 0.0
    for Z in probe.chunks(1 << 20):
        h1, h2 = _max_affine(Z, S1), _max_affine(Z, S2)
        finite = h2 - h1 <= 1e-6 * (1.0 + np.abs(h1))
        viol = ((Z[:, :n] @ G.T - c) / norms).max(axis=1)
        bad = finite & (viol > far)
        worst = max(worst, float(viol[finite].max(initial=0.0)))
        if bad.any():
            i = int(np.argmax(bad))
            return CheckReport("fitzpatrick-domain", Verdict.POSSIBLE_FAIL,
                               witness=tuple(float(v) for v in Z[i]),
                               details={"distance": float(viol[i])},
                               tolerances={"distance": far})
    return CheckReport("fitzpatrick-domain", Verdict.HOLDS_AT_RESOLUTION,
                       details={"max_distance_where_finite": worst},
                       tolerances={"distance": far, "growth": 1e-6})


# -- difference-map equivalence ------------------------------------------------

def difference_map_equivalence(U, V, L: Optional[LinearMapRep] = None) -> CheckReport:
    """Compare ``0 in ri(R(L) - U x V)`` with ``0 in ri(U - V)`` for the diagonal ``L``."""
    U, V = _as_set(U), _as_set(V)
    n = U.dim
    Lm = np.vstack([np.eye(n), np.eye(n)]) if L is None else L.matrix
    lifted = relint_contains_zero(minkowski_diff(_range_set(Lm), U.product(V)))
    plain = relint_contains_zero(minkowski_diff(U, V))
    details = {"range_minus_product": lifted, "difference": plain}
    return CheckReport("diff-map", _verdict(lifted == plain), details=details)


def _is_linear(op: OperatorRep) -> bool:
    if isinstance(op, AffineMonotone):
        return bool(np.all(op.q == 0))
    if isinstance(op, SkewLinear):
        return True
    if isinstance(op, NormalCone):
        if np.any(op.c != 0):
            return False
        P = hrep_to_vrep(op.G, op.c, op.dim)
        return all(cone_contains(P.rays, -r) for r in P.rays)
    if isinstance(op, (Sum, Product)):
        return _is_linear(op.left) and _is_linear(op.right)
    if isinstance(op, Precomp):
        return _is_linear(op.inner)
    return False


def linear_closedness_check(A: OperatorRep, B: OperatorRep) -> CheckReport:
    """For linear ``A, B`` the set ``D(A) - D(B)`` is a subspace, hence closed."""
    for op in (A, B):
        if not _is_linear(op):
            raise ValueError("linear_closedness_check needs operators with linear graphs")
    span = np.vstack([domain(A).rays, domain(B).rays])
    dim = int(np.linalg.matrix_rank(span, tol=1e-9)) if span.size else 0
    return CheckReport("linear-closedness", Verdict.HOLDS, details={"subspace_dim": dim})
