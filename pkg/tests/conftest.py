import numpy as np
import pytest

from kpz_renorm import make_grid


@pytest.fixture
def grid_small():
    """Cheap lattice for structural checks."""
    return make_grid(1.0, 64, 1e-3, 50)


@pytest.fixture
def grid_medium():
    """Lattice where quadrature comparisons are meaningful."""
    return make_grid(1.0, 256, 1e-4, 2500)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=987654321))
