import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fitzcalc.calculus import (chain_representative_lp, chain_representative_value,
                               convex_graph_chain_check, diagonal_map, infconv2_value,
                               precompose, product_operator, skew_shift_identity_check,
                               sum_operator)
from fitzcalc.lpkernel import LPStatus
from fitzcalc.operators import (AffineMonotone, FiniteGraph, LinearMapRep, NormalCone,
                                SkewLinear, SubdiffPL, abs_subdiff, discretize_graph, evaluate,
                                identity_map, l1_subdiff)
from fitzcalc.pairing import PairedPoint, pairing_p, point
from fitzcalc.probe import BoxProbe
from fitzcalc.reports import Verdict
from fitzcalc.representatives import RepFunction, penot_value

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])
DIAG = diagonal_map(1)


def interval_of(P):
    return -P.support([-1.0]), P.support([1.0])


def test_sum_examples():
    I = identity_map()
    assert evaluate(sum_operator(I, I), [1.0]).vertices.tolist() == [[2.0]]
    assert interval_of(evaluate(sum_operator(abs_subdiff(), I), [0.0])) == (-1.0, 1.0)
    touching = sum_operator(NormalCone.interval(0, 1), NormalCone.interval(1, 2))
    assert interval_of(evaluate(touching, [1.0])) == (-math.inf, math.inf)
    with pytest.raises(ValueError):
        sum_operator(I, identity_map(2))


def test_precompose_examples():
    T = precompose(DIAG, identity_map(2))
    for x in (-1.0, 0.5, 3.0):
        assert evaluate(T, [x]).vertices.tolist() == [[2 * x]]
    zero = precompose(LinearMapRep([[0.0], [0.0]]), NormalCone.box([-1, -1], [1, 1]))
    assert evaluate(zero, [5.0]).vertices.tolist() == [[0.0]]
    box = precompose(DIAG, NormalCone.box([0, 0], [1, 1]))
    ref = NormalCone.interval(0, 1)
    for x in (0.0, 0.5, 1.0):
        a, b = evaluate(box, [x]), evaluate(ref, [x])
        assert interval_of(a) == interval_of(b)
    assert evaluate(box, [2.0]).empty


def test_diagonal_adjoint():
    D = diagonal_map(3)
    x, y = np.array([1.0, -2.0, 0.5]), np.arange(6.0)
    assert D.apply(x) @ y == pytest.approx(x @ D.apply_adjoint(y))


def test_chain_representative_examples():
    M = discretize_graph(identity_map(2), BoxProbe.cube(2, 2.0, 0.5))
    assert chain_representative_value(DIAG, M, [1.0], [2.0]).value == pytest.approx(2.0)
    assert chain_representative_value(DIAG, M, [1.0], [3.0]).value == math.inf
    g = FiniteGraph([[0.0], [1.0], [2.0]], [[0.0], [0.5], [3.0]])
    L = LinearMapRep([[1.0]])
    for z in ([0.5], [0.25]), ([1.5], [1.0]), ([1.0], [2.0]):
        assert chain_representative_value(L, g, *z).value == pytest.approx(
            penot_value(g, point(*z)).value)


def test_infconv_examples():
    I2, B = identity_map(2), SkewLinear(ROT)
    h1, hB = RepFunction.fitzpatrick_of(I2), RepFunction.fitzpatrick_of(B)
    for x, xs in (([0.3, -0.7], [1.1, 0.4]), ([1.0, 0.0], [0.0, 0.0]), ([2.0, 1.0], [-1, 3])):
        x, xs = np.array(x, float), np.array(xs, float)
        assert infconv2_value(h1, hB, x, xs).value == pytest.approx(
            h1(PairedPoint(x, xs - ROT @ x)), rel=1e-12, abs=1e-12)
    h0 = RepFunction.fitzpatrick_of(FiniteGraph([[0.0]], [[0.0]]))
    assert infconv2_value(h0, h0, [0.3], [1.2]).value == 0.0
    hI, hZ = RepFunction.fitzpatrick_of(identity_map()), RepFunction.fitzpatrick_of(
        AffineMonotone([[0.0]]))
    assert infconv2_value(hI, hZ, [1.0], [1.0]).value == pytest.approx(1.0)


def test_infconv_against_dual_grid():
    # brute force over y*: h_g1(x, y*) + h_g2(x, x* - y*), piecewise linear in y*
    g1 = FiniteGraph([[-1.0], [0.0], [1.0]], [[-1.0], [0.5], [2.0]])
    g2 = FiniteGraph([[-0.5], [0.5], [1.5]], [[0.0], [0.0], [1.0]])
    h1, h2 = RepFunction.fitzpatrick_of(g1), RepFunction.fitzpatrick_of(g2)
    x, xs = 0.4, 0.9
    ys = np.linspace(-10, 10, 2_000_001)
    X = np.full_like(ys, x)
    vals = h1.values(np.column_stack([X, ys])) + h2.values(np.column_stack([X, xs - ys]))
    exact = infconv2_value(h1, h2, [x], [xs]).value
    assert exact <= vals.min() + 1e-12 and vals.min() - exact < 1e-5


def test_infconv_rejects_unsupported():
    hI = RepFunction.fitzpatrick_of(identity_map())
    g = FiniteGraph([[0.0]], [[0.0]])
    with pytest.raises(ValueError):
        infconv2_value(hI, RepFunction.penot_of(g), [0.0], [0.0])


def test_skew_identity_examples():
    probe = BoxProbe.cube(2, 2.0, 0.1)
    rep = skew_shift_identity_check(identity_map(2), ROT, probe)
    assert rep.verdict is Verdict.HOLDS
    hAB = RepFunction.fitzpatrick_of(sum_operator(identity_map(2), SkewLinear(ROT)))
    hA = RepFunction.fitzpatrick_of(identity_map(2))
    z = PairedPoint([1.0, 0.0], [0.0, 0.0])
    assert hAB(z) == pytest.approx(0.5) and hA(PairedPoint(z.x, z.xstar - ROT @ z.x)) == 0.5
    assert skew_shift_identity_check(identity_map(2), np.zeros((2, 2)), probe).verdict is Verdict.HOLDS
    coarse = BoxProbe.cube(2, 2.0, 0.25)
    assert skew_shift_identity_check(l1_subdiff(2), ROT, coarse).passed


def test_convex_graph_chain_examples():
    assert convex_graph_chain_check(DIAG, identity_map(2)).verdict is Verdict.HOLDS
    assert convex_graph_chain_check(LinearMapRep([[1.0]]), identity_map()).verdict is Verdict.HOLDS
    zero = LinearMapRep([[0.0], [0.0]])
    assert convex_graph_chain_check(zero, identity_map(2)).verdict is Verdict.HOLDS


@given(st.integers(0, 10_000))
def test_sum_equals_chain_of_product(seed):
    rng = np.random.default_rng(seed)
    pool = [abs_subdiff(), NormalCone.interval(-1, 1), identity_map(),
            SubdiffPL([[2.0], [-1.0], [0.0]], [0.0, 0.0, 0.5]), NormalCone.interval(0, 2)]
    A, B = pool[int(rng.integers(5))], pool[int(rng.integers(5))]
    via_chain = precompose(diagonal_map(1), product_operator(A, B))
    dirs = rng.normal(size=(16, 1))
    for _ in range(20):
        x = [float(rng.choice([0.0, 1.0, -1.0, 2.0, rng.uniform(-2, 2)]))]
        left, right = evaluate(sum_operator(A, B), x), evaluate(via_chain, x)
        assert left.empty == right.empty
        if not left.empty:
            assert np.allclose(left.support_many(dirs), right.support_many(dirs), atol=1e-9)


@given(st.integers(0, 10_000))
def test_chain_representative_dominates_coupling(seed):
    rng = np.random.default_rng(seed)
    M = discretize_graph(AffineMonotone([[1.0, 0.5], [-0.5, 2.0]]), BoxProbe.cube(2, 2.0, 0.5))
    L = LinearMapRep(rng.uniform(-1, 1, size=(2, 1)))
    for _ in range(5):
        x, xs = rng.uniform(-1, 1, 1), rng.uniform(-3, 3, 1)
        sol = chain_representative_lp(L, M, x, xs)
        assert sol.status in (LPStatus.OPTIMAL, LPStatus.INFEASIBLE)
        r = chain_representative_value(L, M, x, xs).value
        assert r >= float(x @ xs) - 1e-9


def test_skew_shift_then_maximal(rng):
    A = AffineMonotone([[1.0, 0.0], [0.0, 0.5]])
    assert skew_shift_identity_check(A, ROT, BoxProbe.cube(2, 1.0, 0.25)).passed
    z = PairedPoint.from_array(rng.uniform(-1, 1, 4))
    hAB = RepFunction.fitzpatrick_of(sum_operator(A, SkewLinear(ROT)))
    assert hAB(z) >= pairing_p(z) - 1e-9
