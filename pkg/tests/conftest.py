import pytest

from rankope import PositionBiasCurve, toy_scenario
from rankope.clicks import TOY_CURVE

_CRITERIA = []


def record_criterion(number, name, passed, detail=""):
    _CRITERIA.append((number, name, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_CRITERIA, key=lambda c: str(c[0])):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number} {name} {detail}".rstrip())


@pytest.fixture
def curve():
    return PositionBiasCurve(TOY_CURVE)


@pytest.fixture
def scenario():
    return toy_scenario(0.95)
