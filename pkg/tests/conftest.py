import math

import pytest
from hypothesis import HealthCheck, settings

from fregier.conic_core import EllipseAxes

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

# criterion id -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture
def e21():
    return EllipseAxes((0.0, 0.0), 2.0, 1.0)


@pytest.fixture
def unit_circle():
    return EllipseAxes((0.0, 0.0), 1.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        title, status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {status:<5} {title}: {detail}")
