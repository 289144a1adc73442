import numpy as np
import pytest
from hypothesis import settings

from vectorquad.controller import GainSet
from vectorquad.vehicle import VehicleParams

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def params():
    return VehicleParams()


@pytest.fixture
def gains(params):
    return GainSet.default(params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
