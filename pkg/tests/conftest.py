import numpy as np
import pytest

from cpdilate import make_algebra, make_cpmap


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def two_point_algebra():
    """The diagonal algebra C^2 on C^2."""
    return make_algebra([(1, 1), (1, 1)])


@pytest.fixture
def worked_map(two_point_algebra):
    """The symmetric stochastic map S(a) = ((a1+a2)/2, (a1+a2)/2) on C^2."""
    alg = two_point_algebra
    return make_cpmap(alg, alg, 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]]))


def random_hermitian(rng, n):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (m + m.conj().T)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    a = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return a @ a.conj().T
