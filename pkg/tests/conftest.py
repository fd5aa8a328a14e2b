import pytest

from sphereclimb.coordinator import ClimbPlan, ClimbSetup, run_climb
from sphereclimb.grip import GripModel

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])


SURE_GRIP = GripModel(p_grip=1.0)


@pytest.fixture(scope="session")
def nominal_cycle():
    """One four-hop Mars cycle, every grip succeeds."""
    return run_climb(ClimbPlan(cycles=1), ClimbSetup(grip=SURE_GRIP))


@pytest.fixture(scope="session")
def nominal_two_cycles():
    return run_climb(ClimbPlan(cycles=2), ClimbSetup(grip=SURE_GRIP))


@pytest.fixture(scope="session")
def failure_two_cycles():
    """Robot 1 misses its grip once on its second hop."""
    return run_climb(ClimbPlan(cycles=2), ClimbSetup(grip=SURE_GRIP, forced_failures=((1, 2),)))
