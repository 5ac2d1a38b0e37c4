import numpy as np
import pytest

from powerlloyd.geometry import Domain
from powerlloyd.measures import ConstantDensity

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def square():
    return Domain(UNIT_SQUARE.copy())


@pytest.fixture
def uniform():
    return ConstantDensity(1.0)


def random_points_in_square(rng, n):
    return rng.uniform(0.05, 0.95, size=(n, 2))
