import sys

import pytest

from midlayer.lattice import middle_graph


@pytest.fixture(scope="session")
def g2():
    return middle_graph(2)


@pytest.fixture(scope="session")
def g3():
    return middle_graph(3)


@pytest.fixture(scope="session")
def g4():
    return middle_graph(4)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
