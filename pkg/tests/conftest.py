import pytest

from policygraph.env import GridSpec, State
from policygraph.policy_graph import SuccessorMap

ACCEPTANCE_LINES: list[str] = []


def record_criterion(label: str, passed: bool, detail: str = "") -> None:
    line = f"{'PASS' if passed else 'FAIL'}  {label}"
    if detail:
        line += f"  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def grid3():
    return GridSpec(3, 3, 8)


def _toward_center(s):
    x, y = s
    if (x, y) == (1, 1):
        return (1, 1)
    # move along x first, then y
    if x != 1:
        return (x + (1 if x < 1 else -1), y)
    return (x, y + (1 if y < 1 else -1))


@pytest.fixture
def star_map(grid3):
    """Every state steps toward the centre goal; corners go horizontally first."""
    return SuccessorMap.from_table({s: _toward_center(s) for s in grid3.states}, goal=(1, 1), order=grid3.states)


@pytest.fixture
def trap_map(grid3):
    """Column 0 is captured by the 2-cycle (0,0)<->(0,1); the rest flows to (1,1)."""
    table = {
        (0, 0): (0, 1), (0, 1): (0, 0), (0, 2): (0, 1),
        (1, 0): (1, 1), (1, 1): (1, 1), (1, 2): (1, 1),
        (2, 0): (2, 1), (2, 1): (1, 1), (2, 2): (2, 1),
    }
    return SuccessorMap.from_table(table, goal=(1, 1), order=grid3.states)


@pytest.fixture
def identity_map(grid3):
    return SuccessorMap.from_table({s: s for s in grid3.states}, goal=(1, 1), order=grid3.states)


def state(x, y):
    return State(x, y)
