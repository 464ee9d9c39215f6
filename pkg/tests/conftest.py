import numpy as np
import pytest

from mal.grid import Grid, make_potential


@pytest.fixture(params=["spectral", "central"])
def scheme(request):
    return request.param


@pytest.fixture
def grid32():
    return Grid(32, "spectral")


@pytest.fixture
def flat32(grid32):
    return make_potential(np.zeros((32, 32)), grid32)
