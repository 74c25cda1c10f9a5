import numpy as np
import pytest

from bidshade.grid import build_grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_grid():
    return build_grid((0, 1), (0, 3), 10, 10, 0.8)
