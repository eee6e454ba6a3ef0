import numpy as np
import pytest

from depthfield import CameraArrayConfig


@pytest.fixture
def cfg_small():
    """3x3 views, small frames, c pinned to 3e8 for round numbers."""
    return CameraArrayConfig(nu=3, nv=3, nx=48, ny=36, c=3e8)


@pytest.fixture
def cfg_tiny():
    return CameraArrayConfig(nu=2, nv=2, nx=8, ny=6, c=3e8)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(1234))
