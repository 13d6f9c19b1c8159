import pytest

from hybridsqueeze.analysis import fig2_params
from hybridsqueeze.solver import Method, SolverOptions

# criterion label -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def fig2_base():
    return fig2_params(0.001)


@pytest.fixture
def ti_opts():
    return SolverOptions(method=Method.TIME_INTEGRATION)


@pytest.fixture
def hb_opts():
    return SolverOptions(method=Method.HARMONIC_BALANCE)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
