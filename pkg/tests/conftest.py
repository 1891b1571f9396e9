import numpy as np
import pytest

from symspectra import presets


@pytest.fixture(scope="session")
def free1():
    return presets.free1()


@pytest.fixture(scope="session")
def deg1():
    return presets.deg1()


@pytest.fixture(scope="session")
def smoke3():
    return presets.smoke3()


@pytest.fixture(scope="session")
def tau_a():
    return presets.pair_identity_zero(2)


@pytest.fixture(scope="session")
def tau_b():
    return presets.pair_mixed(2)


@pytest.fixture(scope="session")
def tau_c():
    return presets.pair_zero_identity(2)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
