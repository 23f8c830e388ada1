import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[hypothesis.HealthCheck.too_slow],
)
hypothesis.settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
