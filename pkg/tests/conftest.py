import os

import pytest
from hypothesis import HealthCheck, settings

from ratchet_lab.fixtures import transport_fixture

settings.register_profile(
    "repo", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


@pytest.fixture(scope="session")
def transport():
    return transport_fixture()
