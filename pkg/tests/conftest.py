import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# numeric property tests routinely exceed the default deadline on first
# compilation of the numpy kernels; time limits are not what we test
settings.register_profile(
    "numeric",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("numeric")


@pytest.fixture
def unit_mesh8():
    from autochemo import build_mesh
    return build_mesh(8, 8, 1.0, 1.0)


@pytest.fixture
def asm8(unit_mesh8):
    from autochemo import P1Assembler
    return P1Assembler(unit_mesh8)


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
