import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rotswe.spectral import build_grid

settings.register_profile(
    "repo",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def grid64():
    return build_grid(64, 16 * math.pi)


@pytest.fixture(scope="session")
def grid128():
    return build_grid(128, 16 * math.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
