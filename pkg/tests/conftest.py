import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from fitzcalc import FiniteGraph

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_monotone_graph(rng, n_max=3, k_max=8, scale=1.0):
    """Graph of ``x -> Qx + a_j(x)`` with ``Q`` PSD and ``a_j`` the active slope of a
    max-affine function, so the sample is monotone by construction."""
    n = int(rng.integers(1, n_max + 1))
    k = int(rng.integers(2, k_max + 1))
    X = rng.uniform(-scale, scale, size=(k, n))
    R = rng.normal(size=(n, n))
    Q = R @ R.T / n
    slopes = rng.uniform(-1, 1, size=(3, n))
    offsets = rng.uniform(-0.5, 0.5, size=3)
    active = np.argmax(X @ slopes.T + offsets, axis=1)
    return FiniteGraph(X, X @ Q + slopes[active])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


coord = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


@st.composite
def paired_arrays(draw, n=None):
    n = draw(st.integers(1, 4)) if n is None else n
    return np.array(draw(st.lists(coord, min_size=2 * n, max_size=2 * n)))
