import math

import numpy as np
import pytest

from src.covering.distcore import validate_pmf


def dsbs(crossover: float = 0.1):
    """U_0 constant, (U_1, U_2) doubly symmetric binary pair."""
    a, b = (1 - crossover) / 2, crossover / 2
    return validate_pmf([a, b, b, a], [1, 2, 2])


def random_pmf(rng: np.random.Generator, sizes, alpha: float = 1.0):
    probs = rng.dirichlet(np.full(math.prod(sizes), alpha))
    probs = probs / probs.sum()
    return validate_pmf(probs, sizes)


@pytest.fixture
def dsbs_pmf():
    return dsbs(0.1)


@pytest.fixture
def uniform_cube():
    return validate_pmf(np.full(8, 1 / 8), [2, 2, 2])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
