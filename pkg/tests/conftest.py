import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hallmhd.spectral import Grid

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def grid2():
    return Grid(2, 32)


@pytest.fixture
def grid3():
    return Grid(3, 16)


def rel(a, b):
    """Relative difference with a guard for zero references."""
    a, b = np.asarray(a), np.asarray(b)
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


_ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def report(number: int, title: str, passed: bool, detail: str):
        _ACCEPTANCE[number] = f"{'PASS' if passed else 'FAIL'} criterion {number} ({title}): {detail}"
        print(_ACCEPTANCE[number])
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
