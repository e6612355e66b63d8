import numpy as np
import pytest

from vortexdft.config import RunConfig
from vortexdft.grids import RadialGrid
from vortexdft.vortex import potentials, solve_profile


@pytest.fixture(scope="session")
def config():
    return RunConfig().validate()


@pytest.fixture(scope="session")
def grid(config):
    return RadialGrid(r_min=config.r_min, geometric_ratio=config.geometric_ratio,
                      uniform_step=config.uniform_step, r_max=config.r_max)


@pytest.fixture(scope="session")
def profile(grid):
    return solve_profile(grid=grid)


@pytest.fixture(scope="session")
def pots(profile):
    return potentials(profile)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(7)
