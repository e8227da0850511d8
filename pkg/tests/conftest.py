import numpy as np
import pytest

from chns.grid import Grid, ScalarField, VectorField
from chns.ops import leray_project


@pytest.fixture
def grid32():
    return Grid(32, 32)


@pytest.fixture
def grid_rect():
    return Grid(32, 24, lx=2.0, ly=1.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_scalar(grid, rng, amp=1.0):
    return ScalarField(amp * rng.standard_normal((grid.nx, grid.ny)), grid)


def random_vector(grid, rng, amp=1.0):
    uy = amp * rng.standard_normal((grid.nx, grid.ny + 1))
    uy[:, 0] = 0.0
    uy[:, -1] = 0.0
    return VectorField(amp * rng.standard_normal((grid.nx, grid.ny)), uy, grid)


def random_divfree(grid, rng, amp=1.0):
    v, _ = leray_project(random_vector(grid, rng, amp))
    return v
