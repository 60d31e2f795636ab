import numpy as np
import pytest

from gnslab.sampling import rng_from_seed


@pytest.fixture
def rng():
    return rng_from_seed(12345)


@pytest.fixture
def rng2():
    return rng_from_seed(98765)


def random_matrix(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
