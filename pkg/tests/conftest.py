import math

import numpy as np
import pytest

from flowlab.families import conformal_bump
from flowlab.geometry import Metric
from flowlab.grid import build_grid


@pytest.fixture
def grid32():
    return build_grid(2, [32, 32], [2 * math.pi] * 2)


@pytest.fixture
def grid16():
    return build_grid(2, [16, 16], [2 * math.pi] * 2)


@pytest.fixture
def flat32(grid32):
    return Metric.flat(grid32)


@pytest.fixture
def bump32(grid32):
    return conformal_bump(grid32, 0.17)


def conformal(grid, u):
    return Metric(grid, np.exp(2 * u)[..., None, None] * np.eye(grid.dim))
