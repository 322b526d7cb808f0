import numpy as np
import pytest

from netdiscover import _jit


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    if request.param == "numba" and not _jit.HAS_NUMBA:
        pytest.skip("numba not installed")
    previous = _jit.set_backend(request.param)
    yield request.param
    _jit.set_backend(previous)
