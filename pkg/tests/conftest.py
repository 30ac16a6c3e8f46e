import math

import pytest

from lhvkit.models import get_model
from lhvkit.numerics import MCConfig


@pytest.fixture(scope="session")
def qm():
    return get_model("qm")


@pytest.fixture(scope="session")
def naive():
    return get_model("naive")


@pytest.fixture(scope="session")
def unpolarized():
    return get_model("unpolarized")


@pytest.fixture(scope="session")
def sign():
    return get_model("sign", mc=MCConfig(seed=7, samples=100_000))


@pytest.fixture
def phi_grid_37():
    return [math.radians(5.0 * k) for k in range(37)]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
