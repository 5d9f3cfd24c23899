import numpy as np
import pytest

from twinmec import kernels


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    """Compile every jitted kernel up front so timed tests measure work."""
    kernels.warmup()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
