import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from photonholes.model import SimConfig

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


def small_config(n=3, **kw) -> SimConfig:
    """Tiny grids; the spacing warning is irrelevant for unit tests."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return SimConfig(n_modes=n, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
