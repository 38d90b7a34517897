import pytest

from fpcavity.stack import nominal_cavity, nominal_mirrors


@pytest.fixture(scope="session")
def mirrors():
    return nominal_mirrors()


@pytest.fixture(scope="session")
def cavity():
    return nominal_cavity()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
