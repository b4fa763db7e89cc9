import numpy as np
import pytest

from ehglue.lattice import BackgroundField, omega_partial


@pytest.fixture(scope="session")
def background8():
    return BackgroundField(cutoff=8, n0=1, degree=12)


@pytest.fixture(scope="session")
def background32():
    return BackgroundField(cutoff=32, n0=1, degree=12)


@pytest.fixture(scope="session")
def omega32():
    return omega_partial(32)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


def sample_offorigin(rng, n, r_lo, r_hi):
    d = rng.normal(size=(n, 4))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = np.exp(rng.uniform(np.log(r_lo), np.log(r_hi), size=(n, 1)))
    return d * r


@pytest.fixture
def points(rng):
    return sample_offorigin(rng, 40, 0.3, 5.0)
