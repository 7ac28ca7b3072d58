import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from physdisc.simkit import default_camera

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def cam():
    return default_camera()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
