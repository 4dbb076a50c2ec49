"""Dense two-phase simplex solver and small linear-algebra helpers.

Every LP-backed routine in the package goes through :func:`solve_lp`. The
solver works on a dense tableau, always pivots with Bland's rule and is
therefore deterministic and immune to cycling on the heavily degenerate
problems that vertex/ray computations produce.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-8


class LPStatus(str, enum.Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"
    NUMERIC_FAILURE = "NUMERIC_FAILURE"


Bound = tuple[Optional[float], Optional[float]]


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min c @ x`` subject to ``A_eq x = b_eq``, ``A_ub x <= b_ub`` and bounds.

    ``bounds`` holds one ``(lower, upper)`` pair per variable, ``None`` meaning
    unbounded on that side. When omitted every variable is non-negative.
    """

    c: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    bounds: Optional[Sequence[Bound]] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        object.__setattr__(self, "c", c)
        for a_name, b_name in (("A_eq", "b_eq"), ("A_ub", "b_ub")):
            A, b = getattr(self, a_name), getattr(self, b_name)
            if A is None or np.size(A) == 0:
                A = np.zeros((0, n))
                b = np.zeros(0)
            A = np.asarray(A, dtype=float).reshape(-1, n)
            b = np.asarray(b, dtype=float).ravel()
            if A.shape[0] != b.size:
                raise ValueError(f"{a_name} has {A.shape[0]} rows but {b_name} has {b.size}")
            if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
                raise ValueError("LP coefficients must be finite")
            object.__setattr__(self, a_name, A)
            object.__setattr__(self, b_name, b)
        if not np.all(np.isfinite(c)):
            raise ValueError("LP objective must be finite")
        bounds = self.bounds
        if bounds is None:
            bounds = [(0.0, None)] * n
        bounds = tuple((None if lo is None or lo == -math.inf else float(lo),
                        None if hi is None or hi == math.inf else float(hi))
                       for lo, hi in bounds)
        if len(bounds) != n:
            raise ValueError(f"expected {n} bounds, got {len(bounds)}")
        object.__setattr__(self, "bounds", bounds)

    @property
    def num_vars(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LPSolution:
    status: LPStatus
    x: Optional[np.ndarray] = None
    value: float = math.nan
    iterations: int = 0
    # multipliers of the internal standard form, see ``standard_form``
    dual: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


@dataclass(frozen=True, eq=False)
class StandardForm:
    """``min c @ s`` with ``A s = b``, ``s >= 0``; original ``x = T s + shift``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    T: np.ndarray
    shift: np.ndarray


def standard_form(lp: LinearProgram) -> StandardForm:
    n = lp.num_vars
    cols = []  # (orig var, sign)
    shift = np.zeros(n)
    upper_rows = []
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo is not None:
            shift[j] = lo
            cols.append((j, 1.0))
            if hi is not None:
                if hi < lo:
                    raise ValueError(f"variable {j} has empty bounds [{lo}, {hi}]")
                upper_rows.append((len(cols) - 1, hi - lo))
        elif hi is not None:
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    N = len(cols)
    T = np.zeros((n, N))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s

    A_eq = lp.A_eq @ T
    b_eq = lp.b_eq - lp.A_eq @ shift
    A_ub = lp.A_ub @ T
    b_ub = lp.b_ub - lp.A_ub @ shift
    if upper_rows:
        extra = np.zeros((len(upper_rows), N))
        for r, (k, u) in enumerate(upper_rows):
            extra[r, k] = 1.0
        A_ub = np.vstack([A_ub, extra])
        b_ub = np.concatenate([b_ub, [u for _, u in upper_rows]])
    m_ub = A_ub.shape[0]
    A = np.block([[A_eq, np.zeros((A_eq.shape[0], m_ub))],
                  [A_ub, np.eye(m_ub)]])
    b = np.concatenate([b_eq, b_ub])
    c = np.concatenate([lp.c @ T, np.zeros(m_ub)])
    T_full = np.hstack([T, np.zeros((n, m_ub))])
    return StandardForm(A=A, b=b, c=c, T=T_full, shift=shift)


def _pivot(tab: np.ndarray, r: int, k: int) -> None:
    tab[r] /= tab[r, k]
    col = tab[:, k].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])
    tab[:, k] = 0.0
    tab[r, k] = 1.0


def _simplex(tab: np.ndarray, basis: list[int], ncols: int, max_iter: int) -> tuple[str, int]:
    """Run Bland-rule simplex on ``tab`` whose last row is the reduced cost row.

    Only the first ``ncols`` columns may enter the basis.
    """
    it = 0
    m = len(basis)
    while True:
        candidates = np.flatnonzero(tab[-1, :ncols] < -1e-9)
        if candidates.size == 0:
            return "optimal", it
        if it >= max_iter:
            return "iterlimit", it
        entering = int(candidates[0])
        column = tab[:m, entering]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            return "unbounded", it
        ratios = tab[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12]
        # Bland: among ties pick the smallest basic variable index
        leaving = int(min(tied, key=lambda i: basis[i]))
        _pivot(tab, leaving, entering)
        basis[leaving] = entering
        it += 1


def solve_lp(lp: LinearProgram, max_iter: Optional[int] = None) -> LPSolution:
    """Solve ``lp`` with the two-phase dense simplex method (Bland's rule)."""
    sf = standard_form(lp)
    A, b, c = sf.A.copy(), sf.b.copy(), sf.c
    m, N = A.shape
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    if max_iter is None:
        max_iter = 50 * (m + N) + 100

    # phase one: one artificial per row
    tab = np.zeros((m + 1, N + m + 1))
    tab[:m, :N] = A
    tab[:m, N:N + m] = np.eye(m)
    tab[:m, -1] = b
    tab[-1, :N] = -A.sum(axis=0)
    tab[-1, -1] = -b.sum()
    basis = list(range(N, N + m))
    outcome, it1 = _simplex(tab, basis, N + m, max_iter)
    if outcome == "iterlimit":
        return LPSolution(LPStatus.NUMERIC_FAILURE, iterations=it1)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if -tab[-1, -1] > 1e-9 * scale:
        return LPSolution(LPStatus.INFEASIBLE, iterations=it1)

    # drive remaining artificials out of the basis, dropping redundant rows
    keep = []
    for i in range(m):
        if basis[i] >= N:
            row = tab[i, :N]
            k = next((j for j in range(N) if abs(row[j]) > 1e-9), None)
            if k is None:
                continue
            _pivot(tab, i, k)
            basis[i] = k
        keep.append(i)
    tab = np.vstack([tab[keep][:, list(range(N)) + [-1]], np.zeros((1, N + 1))])
    basis = [basis[i] for i in keep]
    m2 = len(basis)

    # phase two
    tab[-1, :N] = c
    for i, j in enumerate(basis):
        if tab[-1, j] != 0.0:
            tab[-1] -= tab[-1, j] * tab[i]
    outcome, it2 = _simplex(tab, basis, N, max_iter)
    iterations = it1 + it2
    if outcome == "iterlimit":
        return LPSolution(LPStatus.NUMERIC_FAILURE, iterations=iterations)
    if outcome == "unbounded":
        return LPSolution(LPStatus.UNBOUNDED, value=-math.inf, iterations=iterations)

    # recompute the basic solution from the original data and verify it
    s = np.zeros(N)
    rows = np.array(keep, dtype=int)
    if m2:
        B = A[np.ix_(rows, basis)]
        try:
            if np.linalg.cond(B) > 1e12:
                return LPSolution(LPStatus.NUMERIC_FAILURE, iterations=iterations)
            xb = np.linalg.solve(B, b[rows])
            y = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError:
            return LPSolution(LPStatus.NUMERIC_FAILURE, iterations=iterations)
        if xb.min(initial=0.0) < -FEAS_TOL * scale:
            return LPSolution(LPStatus.NUMERIC_FAILURE, iterations=iterations)
        s[basis] = np.maximum(xb, 0.0)
    else:
        y = np.zeros(0)
    if np.abs(A @ s - b).max(initial=0.0) > FEAS_TOL * scale:
        return LPSolution(LPStatus.NUMERIC_FAILURE, iterations=iterations)
    dual = np.zeros(m)
    dual[rows] = y
    dual[neg] *= -1.0
    x = sf.T @ s + sf.shift
    return LPSolution(LPStatus.OPTIMAL, x=x, value=float(lp.c @ x),
                      iterations=iterations, dual=dual)


def dual_certificate(lp: LinearProgram, sol: LPSolution) -> tuple[bool, float]:
    """Check the dual multipliers of an optimal solve.

    Returns ``(dual_feasible, gap)`` where feasibility is ``A.T y <= c`` on the
    internal standard form (to 1e-7) and ``gap`` is the absolute difference
    between primal and dual objective values.
    """
    if not sol.optimal:
        raise ValueError("dual certificate only exists for optimal solutions")
    sf = standard_form(lp)
    y = sol.dual
    slack = sf.c - sf.A.T @ y
    feasible = bool(slack.min(initial=0.0) >= -1e-7)
    const = float(lp.c @ sf.shift)
    gap = abs(float(sf.b @ y) + const - sol.value)
    return feasible, gap


def feasible_point(A_eq=None, b_eq=None, A_ub=None, b_ub=None, n=None, bounds=None):
    """Return some point of the polyhedron, or ``None`` if it is empty."""
    if n is None:
        n = np.shape(A_eq if A_eq is not None else A_ub)[1]
    if bounds is None:
        bounds = [(None, None)] * n
    sol = solve_lp(LinearProgram(np.zeros(n), A_eq, b_eq, A_ub, b_ub, bounds))
    if sol.status is LPStatus.INFEASIBLE:
        return None
    if not sol.optimal:
        raise ArithmeticError(f"feasibility LP ended with {sol.status.value}")
    return sol.x


def pseudo_inverse_apply(S, v) -> tuple[bool, np.ndarray]:
    """Apply the Moore-Penrose inverse of a symmetric PSD matrix to ``v``.

    Eigenvalues below ``1e-9 * max eigenvalue`` are treated as zero. The first
    return value says whether ``v`` lies in the range of ``S``.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    v = np.asarray(v, dtype=float)
    if np.abs(S - S.T).max(initial=0.0) > 1e-12 * max(1.0, np.abs(S).max(initial=0.0)):
        raise ValueError("pseudo_inverse_apply needs a symmetric matrix")
    lam, U = np.linalg.eigh(S)
    cutoff = 1e-9 * max(lam.max(initial=0.0), 0.0)
    inv = np.where(lam > cutoff, 1.0 / np.where(lam > cutoff, lam, 1.0), 0.0)
    w = U @ (inv * (U.T @ v))
    resid = np.linalg.norm(S @ w - v)
    return bool(resid <= 1e-8 * np.linalg.norm(v)), w


def psd_factor(S) -> tuple[np.ndarray, np.ndarray]:
    """Split a symmetric PSD ``S`` into ``(R, P)`` with ``S^+ = R @ R.T``.

    ``P`` holds an orthonormal basis of the null space of ``S`` (columns).
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    lam, U = np.linalg.eigh((S + S.T) / 2)
    cutoff = 1e-9 * max(lam.max(initial=0.0), 0.0)
    pos = lam > cutoff
    if not np.any(pos):
        pos = lam > math.inf  # all-zero matrix
    R = U[:, pos] / np.sqrt(lam[pos])
    return R, U[:, ~pos]


def null_space(A, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of ``ker A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n)
    _, sv, Vt = np.linalg.svd(A)
    tol = rtol * max(1.0, sv.max(initial=0.0))
    rank = int(np.sum(sv > tol))
    return Vt[rank:].T.copy()


def range_basis(A, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the column space of ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.zeros((A.shape[0], 0))
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    tol = rtol * max(1.0, sv.max(initial=0.0))
    return U[:, sv > tol].copy()


class QuadraticFiberMin:
    """Row-wise ``min_t (1/4) V^T S^+ V`` over ``V = V0 + N t`` restricted to
    ``V in range(S)`` (``+inf`` when no ``t`` puts ``V`` in the range).

    ``S`` is symmetric PSD. The range constraint is linear in ``t`` and the
    objective is a least-squares residual in the remaining freedom, so both
    steps are closed-form projections.
    """

    def __init__(self, S, N):
        S = np.atleast_2d(np.asarray(S, dtype=float))
        N = np.asarray(N, dtype=float).reshape(S.shape[0], -1)
        self.R, P = psd_factor(S)
        self.P = P
        self.N = N
        self.PN = P.T @ N
        k = N.shape[1]
        self.PN_pinv = np.linalg.pinv(self.PN) if P.shape[1] and k else np.zeros((k, P.shape[1]))
        K = null_space(self.PN) if P.shape[1] and k else np.eye(k)
        A = self.R.T @ N @ K
        self.proj = np.eye(A.shape[0]) - A @ np.linalg.pinv(A) if A.size else np.eye(A.shape[0])

    def values(self, V0) -> np.ndarray:
        V0 = np.atleast_2d(np.asarray(V0, dtype=float))
        feasible = np.ones(V0.shape[0], dtype=bool)
        t0 = np.zeros((V0.shape[0], self.N.shape[1]))
        if self.P.shape[1]:
            PV = V0 @ self.P
            t0 = -PV @ self.PN_pinv.T
            resid = np.linalg.norm(PV + t0 @ self.PN.T, axis=1)
            feasible = resid <= 1e-9 * np.maximum(1.0, np.linalg.norm(V0, axis=1))
        b = (V0 + t0 @ self.N.T) @ self.R
        r = b @ self.proj.T
        return np.where(feasible, 0.25 * np.einsum("ij,ij->i", r, r), math.inf)
