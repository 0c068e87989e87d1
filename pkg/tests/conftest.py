import pytest

from ineqlab.functionals import DualityFrame
from ineqlab.profiles import default_grid
from ineqlab.radial import make_grid


@pytest.fixture(scope="session")
def grid_d3():
    return default_grid(3)


@pytest.fixture(scope="session")
def grid_d1():
    return make_grid(1, 30.0, 512, 2.0)


@pytest.fixture(scope="session")
def frame_d3(grid_d3):
    return DualityFrame(grid_d3)
