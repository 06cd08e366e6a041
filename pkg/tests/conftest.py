import os

import pytest
from hypothesis import HealthCheck, settings

from privimmune import use_backend

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(params=["numba", "numpy"])
def each_backend(request):
    with use_backend(request.param):
        yield request.param
