import pytest

from hft.dynamics import grow_tangle


@pytest.fixture(scope="session")
def grown():
    """The default grown tangle (area-preserving Henon map, c = -3/4)."""
    return grow_tangle()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.LINES):
        terminalreporter.write_line(line)
