import numpy as np
import pytest

from lowmach.eos import EosParams
from lowmach.spectral import GridSpec


@pytest.fixture(scope="session")
def params():
    return EosParams(gamma=1.4, p_bar=1.0)


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(dim=2, n=32)


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(dim=2, n=64)


@pytest.fixture(scope="session")
def grid3d():
    return GridSpec(dim=3, n=16)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
