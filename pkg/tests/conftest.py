import os

import pytest
from hypothesis import HealthCheck, settings

from hpaxis.model import find_equilibrium, reference_params

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=30, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def case6():
    p = reference_params(6.0, 1.0)
    return p, find_equilibrium(p)


@pytest.fixture(scope="session")
def case3():
    p = reference_params(3.0, 0.95)
    return p, find_equilibrium(p)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(LINES):
            terminalreporter.write_line(LINES[n])
