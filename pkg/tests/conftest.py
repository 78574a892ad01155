import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from saddlekit import generators as gen

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def disc4():
    return gen.disc_grid(4)


@pytest.fixture(scope="session")
def hyperbolic():
    return gen.graph_of("x^2 - y^2", 4)


@pytest.fixture(scope="session")
def bump_map():
    return gen.bump(1.0, 0.5, 4)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
