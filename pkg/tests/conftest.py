import numpy as np
import pytest

from regulus import ExperimentParams, make_field, principal_cycle


@pytest.fixture(scope="session")
def field13():
    return make_field(13)


@pytest.fixture(scope="session")
def cycle13(field13):
    return principal_cycle(field13)


@pytest.fixture(scope="session")
def params13():
    return ExperimentParams(rank=1, n_param=64, q=2 ** 16, k=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
