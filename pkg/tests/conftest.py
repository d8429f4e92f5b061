import numpy as np
import pytest

from cookie_idla.environment import CookieEnvironment


@pytest.fixture
def fair_env():
    return CookieEnvironment((), ())


@pytest.fixture
def sym_half_env():
    # one 0.75 cookie per side: drifts (0.5, 0.5), mirror-symmetric
    return CookieEnvironment((0.75,), (0.25,))


@pytest.fixture
def right_half_env():
    # drifts (0.5, 0)
    return CookieEnvironment((0.75,), ())


@pytest.fixture
def boundary_env():
    # drifts (1, 0)
    return CookieEnvironment((0.75, 0.75), ())


@pytest.fixture
def critical_env():
    # drifts (1, 1), mirror-symmetric
    return CookieEnvironment((0.75, 0.75), (0.25, 0.25))


@pytest.fixture
def transient_env():
    # drifts (1.6, 1.6), mirror-symmetric
    return CookieEnvironment((0.9, 0.9), (0.1, 0.1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
