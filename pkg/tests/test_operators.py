import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fitzcalc.calculus import diagonal_map, precompose, sum_operator
from fitzcalc.operators import (AffineMonotone, FiniteGraph, LinearMapRep, NormalCone,
                                SkewLinear, SubdiffPL, abs_subdiff, discretize_graph, domain,
                                evaluate, identity_map, in_graph, is_monotone_finite,
                                l1_subdiff, maximality_probe, monotone_related_inf)
from fitzcalc.oracle import pairwise_monotone_bruteforce
from fitzcalc.pairing import PairedPoint, point
from fitzcalc.probe import BoxProbe
from fitzcalc.reports import Verdict

from conftest import random_monotone_graph

TWO_POINT = FiniteGraph([[0.0], [1.0]], [[0.0], [1.0]])


def interval_of(P):
    return -P.support([-1.0]), P.support([1.0])


def test_evaluate_examples():
    assert interval_of(evaluate(abs_subdiff(), [0.0])) == (-1.0, 1.0)
    cone = evaluate(NormalCone.interval(0, 1), [1.0])
    assert cone.rays.tolist() == [[1.0]] and interval_of(cone) == (0.0, math.inf)
    assert evaluate(identity_map(), [3.0]).vertices.tolist() == [[3.0]]
    assert evaluate(NormalCone.interval(0, 1), [2.0]).empty
    with pytest.raises(ValueError):
        evaluate(identity_map(), [1.0, 2.0])


def test_domain_examples():
    assert sorted(domain(NormalCone.interval(0, 1)).vertices.ravel().tolist()) == [0.0, 1.0]
    dsum = domain(sum_operator(NormalCone.interval(0, 1), NormalCone.interval(1, 2)))
    assert dsum.vertices.tolist() == [[1.0]] and dsum.bounded
    dpre = domain(precompose(diagonal_map(1), NormalCone.box([0, 0], [1, 1])))
    assert interval_of(dpre) == (0.0, 1.0)
    assert interval_of(domain(identity_map())) == (-math.inf, math.inf)


def test_is_monotone_examples():
    assert is_monotone_finite(TWO_POINT).verdict is Verdict.HOLDS
    bad = is_monotone_finite(FiniteGraph([[0.0], [1.0]], [[1.0], [0.0]]))
    assert bad.verdict is Verdict.FAILS
    a, b = np.array(bad.witness[:2]), np.array(bad.witness[2:])
    d = a - b
    assert d[0] * d[1] == -1.0
    dense = discretize_graph(abs_subdiff(), BoxProbe.cube(1, 1.0, 0.05))
    assert is_monotone_finite(dense).verdict is Verdict.HOLDS
    assert pairwise_monotone_bruteforce(dense.as_array())


def test_monotone_matches_bruteforce(rng):
    for _ in range(50):
        g = random_monotone_graph(rng)
        assert is_monotone_finite(g).passed == pairwise_monotone_bruteforce(g.as_array())
    for _ in range(50):
        A = rng.normal(size=(int(rng.integers(2, 6)), 2))
        g = FiniteGraph.from_array(A)
        assert is_monotone_finite(g, tol=1e-12).passed == pairwise_monotone_bruteforce(A)


def test_related_inf_examples():
    assert monotone_related_inf(TWO_POINT, point([0], [1])).value == 0.0
    assert monotone_related_inf(identity_map(), point([1], [1])).value == 0.0
    # min(p(z - (0,0)), p(z - (1,1))) = min(0.25, 0.25)
    assert monotone_related_inf(TWO_POINT, point([0.5], [0.5])).value == 0.25
    assert monotone_related_inf(TWO_POINT, point([0.5], [-0.5])).value == -0.25


def test_related_inf_affine_closed_form():
    op = AffineMonotone([[2.0, 1.0], [-1.0, 1.0]], [0.5, 0.0])
    z = PairedPoint([0.3, -0.4], [1.0, 2.0])
    probe = BoxProbe.cube(2, 3.0, 0.01)
    X = np.stack(np.meshgrid(np.linspace(-6, 6, 601), np.linspace(-6, 6, 601)), -1).reshape(-1, 2)
    D = z.x - X
    brute = np.einsum("ij,ij->i", D, z.xstar - (X @ op.M.T + op.q)).min()
    exact = monotone_related_inf(op, z, probe).value
    assert exact <= brute + 1e-12 and brute - exact < 1e-3


def test_maximality_examples():
    assert maximality_probe(identity_map()).verdict is Verdict.HOLDS_AT_RESOLUTION
    box = BoxProbe.cube(1, 1.0)
    single = maximality_probe(FiniteGraph([[0.0]], [[0.0]]), box)
    assert single.verdict is Verdict.FAILS
    w = PairedPoint.from_array(single.witness)
    assert single.witness == (-1.0, -1.0)
    assert monotone_related_inf(FiniteGraph([[0.0]], [[0.0]]), w).value >= 0
    assert maximality_probe(abs_subdiff(), box).verdict is Verdict.HOLDS_AT_RESOLUTION


def test_discretize_examples():
    probe = BoxProbe.cube(1, 1.0, 0.5)
    pts = {tuple(a) for a in discretize_graph(NormalCone.interval(0, 1), probe).as_array()}
    assert {(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, -1.0)} <= pts
    ident = discretize_graph(identity_map(), BoxProbe.cube(1, 1.0, 1.0))
    assert sorted(map(tuple, ident.as_array())) == [(-1, -1), (0, 0), (1, 1)]
    g = FiniteGraph([[0.0], [5.0]], [[0.0], [5.0]])
    assert discretize_graph(g, probe).as_array().tolist() == [[0.0, 0.0]]


def test_construction_errors():
    with pytest.raises(ValueError):
        AffineMonotone([[-1.0]])
    with pytest.raises(ValueError):
        SkewLinear([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValueError):
        NormalCone([[1.0], [-1.0]], [0.0, -1.0])
    with pytest.raises(ValueError):
        FiniteGraph(np.zeros((0, 1)), np.zeros((0, 1)))
    with pytest.raises(ValueError):
        precompose(LinearMapRep(np.eye(2)), identity_map(3))


MAXIMAL = [identity_map(), abs_subdiff(), NormalCone.interval(0, 1), l1_subdiff(2),
           AffineMonotone([[1.0, 2.0], [-2.0, 0.5]], [0.1, -0.3]),
           NormalCone.box([0, 0], [1, 0.5]), SubdiffPL([[1.0], [0.0], [-2.0]], [0.0, 0.5, 0.0])]


@pytest.mark.parametrize("op", MAXIMAL, ids=lambda o: type(o).__name__)
def test_discretized_samples_lie_on_graph_and_are_monotone(op):
    probe = BoxProbe.cube(op.dim, 1.0, 0.25 if op.dim > 1 else 0.1)
    g = discretize_graph(op, probe)
    for p in g.points:
        assert in_graph(op, p, 1e-9)
    assert is_monotone_finite(g).verdict is Verdict.HOLDS


@given(st.integers(0, 10_000))
def test_related_inf_nonpositive_on_graph(seed):
    g = random_monotone_graph(np.random.default_rng(seed))
    for a in g.points:
        assert monotone_related_inf(g, a).value <= 0.0
    z = g.points[0]
    vals = [np.dot(z.x - b.x, z.xstar - b.xstar) for b in g.points]
    assert min(vals) == monotone_related_inf(g, z).value


@given(st.integers(0, 10_000))
def test_sum_value_is_minkowski_sum(seed):
    rng = np.random.default_rng(seed)
    ops = [abs_subdiff(), NormalCone.interval(-1, 1), identity_map(),
           SubdiffPL([[1.0], [-0.5]], [0.0, 0.2])]
    A, B = ops[int(rng.integers(4))], ops[int(rng.integers(4))]
    x = [float(rng.choice([-1.0, 0.0, 0.4, 1.0, rng.uniform(-1, 1)]))]
    left = evaluate(sum_operator(A, B), x)
    right = evaluate(A, x).minkowski_sum(evaluate(B, x))
    dirs = rng.normal(size=(16, 1))
    assert np.allclose(left.support_many(dirs), right.support_many(dirs), atol=1e-9)
