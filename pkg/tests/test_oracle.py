import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fitzcalc.operators import FiniteGraph
from fitzcalc.oracle import (compositions, coupling_plain, dual_product_plain, grid_extremum,
                             pairwise_monotone_bruteforce, simplex_grid_convexhull_value,
                             simplex_grid_search)
from fitzcalc.pairing import PairedPoint, pairing_rows, point
from fitzcalc.probe import BoxProbe
from fitzcalc.representatives import fitzpatrick_value, penot_value

from conftest import random_monotone_graph


def test_grid_extremum_examples():
    box = BoxProbe.cube(1, 1.0, 0.5)
    assert grid_extremum(coupling_plain, box, "SUP") == 1.0
    assert grid_extremum(lambda z: 3.0, box, "SUP") == 3.0
    assert grid_extremum(lambda z: 3.0, box, "INF") == 3.0
    a = (1.0, 1.0)
    unit = BoxProbe((0.0, 0.0), (1.0, 1.0), 0.5)
    f = lambda z: dual_product_plain(z, a) - coupling_plain(a)
    assert grid_extremum(f, unit, "SUP") == 1.0
    with pytest.raises(ValueError):
        grid_extremum(f, unit, "MAX")


def test_simplex_examples():
    pts = [point([0], [0]), point([1], [1])]
    assert simplex_grid_convexhull_value(pts, [0.0, 1.0], point([0.5], [0.5]), 2) == 0.5
    assert simplex_grid_convexhull_value(pts, [0.0, 1.0], pts[1], 4) == 1.0
    assert simplex_grid_convexhull_value(pts, [0.0, 1.0], point([3], [3]), 4) == math.inf
    with pytest.raises(ValueError):
        simplex_grid_convexhull_value(pts, [0.0, 1.0], pts[0], 0)


def test_compositions_count():
    C = compositions(4, 3)
    assert len(C) == 15 and np.all(C.sum(axis=1) == 4)
    assert len({tuple(r) for r in C}) == 15


def test_pairwise_examples(rng):
    assert pairwise_monotone_bruteforce([point([0], [0]), point([1], [1])])
    assert not pairwise_monotone_bruteforce([point([0], [1]), point([1], [0])])
    for _ in range(50):
        k = int(rng.integers(2, 10))
        xs, ys = np.sort(rng.normal(size=k)), np.sort(rng.normal(size=k))
        assert pairwise_monotone_bruteforce(np.column_stack([xs, ys]))


@given(st.integers(0, 10_000))
def test_fitzpatrick_equals_grid_sup_over_graph(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    probe = BoxProbe.cube(n, 1.0, 0.5)
    grid = probe.points()
    g = FiniteGraph.from_array(grid[rng.choice(len(grid), size=int(rng.integers(1, 6)),
                                               replace=False)])
    members = {tuple(a) for a in g.as_array()}
    # dyadic coordinates keep both evaluation orders free of rounding
    z = PairedPoint.from_array(rng.integers(-16, 17, 2 * n) / 8)
    zt = z.as_tuple()
    f = lambda a: dual_product_plain(zt, a) - coupling_plain(a) if a in members else -math.inf
    assert fitzpatrick_value(g, z).value == grid_extremum(f, probe, "SUP")


def test_relaxed_slack_variant():
    pts = [point([0], [0]), point([1], [1])]
    # with slack 2/steps = 1 the endpoint (0, 0) is admissible for the midpoint
    assert simplex_grid_convexhull_value(pts, [0.0, 1.0], point([0.5], [0.5]), 2, slack=1.0) == 0
    value, lam = simplex_grid_search(pts, [0.0, 1.0], point([0.5], [0.5]), 2)
    assert value == 0.5 and lam.tolist() == [0.5, 0.5]


@given(st.integers(0, 10_000))
def test_grid_value_bounds_lp_and_decreases(seed):
    rng = np.random.default_rng(seed)
    g = random_monotone_graph(rng, n_max=2, k_max=5)
    A = g.as_array()
    vals = pairing_rows(A)
    C = compositions(2, len(A))
    z = (C[int(rng.integers(len(C)))] / 2) @ A
    lp = penot_value(g, PairedPoint.from_array(z)).value
    seq = [simplex_grid_convexhull_value(A, vals, z, s) for s in (2, 4, 8, 16)]
    assert all(a >= b for a, b in zip(seq, seq[1:]))
    assert seq[-1] >= lp - 1e-9


@given(st.integers(0, 10_000))
def test_relaxed_combination_dominates_lp_at_landing_point(seed):
    rng = np.random.default_rng(seed)
    g = random_monotone_graph(rng, n_max=2, k_max=4)
    A = g.as_array()
    vals = pairing_rows(A)
    z = rng.dirichlet(np.ones(len(A))) @ A
    for steps in (2, 4, 8):
        value, lam = simplex_grid_search(A, vals, z, steps, slack=2 / steps)
        if lam is None:
            continue
        landing = lam @ A
        assert np.linalg.norm(landing - z) <= 2 / steps + 1e-12
        assert value >= penot_value(g, PairedPoint.from_array(landing)).value - 1e-9


def test_affinely_independent_graph_matches_lp(rng):
    for _ in range(10):
        g = random_monotone_graph(rng, n_max=1, k_max=3)
        A, vals = g.as_array(), pairing_rows(g.as_array())
        if np.linalg.matrix_rank(A[1:] - A[0]) < len(A) - 1:
            continue  # points sharing an affine piece can be collinear
        C = compositions(16, len(A))
        z = (C[int(rng.integers(len(C)))] / 16) @ A
        lp = penot_value(g, PairedPoint.from_array(z)).value
        assert simplex_grid_convexhull_value(A, vals, z, 16) == pytest.approx(lp, abs=1e-9)
