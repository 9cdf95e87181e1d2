import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci", derandomize=True, max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

from fibrecount.verify import (bilinear_instance, demo_instance,
                               four_squares_instance)


@pytest.fixture(scope="session")
def demo():
    return demo_instance()


@pytest.fixture(scope="session")
def four_squares():
    return four_squares_instance()


@pytest.fixture(scope="session")
def bilinear():
    return bilinear_instance()
