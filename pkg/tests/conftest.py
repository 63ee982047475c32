import numpy as np
import pytest

from aniso_lp.spectral_core import Grid, SpectralField3


@pytest.fixture(scope="session")
def grid16():
    return Grid.cubic(16)


@pytest.fixture(scope="session")
def grid32():
    return Grid.cubic(32)


@pytest.fixture()
def rng():
    return np.random.default_rng(42)


def mesh(grid):
    axes = [np.linspace(0.0, grid.L, n, endpoint=False)
            for n in (grid.n1, grid.n2, grid.n3)]
    return np.meshgrid(*axes, indexing="ij")


def field_from(grid, expr):
    """Build a scalar field from a callable of the mesh arrays."""
    x1, x2, x3 = mesh(grid)
    return SpectralField3.from_values(grid, expr(x1, x2, x3))
