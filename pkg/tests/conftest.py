import numpy as np
import pytest

from funclingam.synthgen import SynthConfig, simulate


@pytest.fixture(scope="session")
def draw300():
    """Generator output at n=300, p=5, W=1000."""
    return simulate(SynthConfig(n=300, p=5, w=1000, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
