import pytest

from onebitcs import _kernels
from onebitcs.model import SignalModel


@pytest.fixture(params=sorted(_kernels.backends()))
def kernels(request):
    """Each available kernel backend module in turn."""
    return _kernels.backends()[request.param]


@pytest.fixture
def fig1_model():
    return SignalModel(rho=0.25, sigma0_sq=1.0)


@pytest.fixture
def fig6_model():
    return SignalModel(rho=0.0625, sigma0_sq=2.0)


ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def _report(number: int, title: str, passed: bool, detail: str = ""):
        line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert passed, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
