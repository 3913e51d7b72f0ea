import pytest

from graphagg.graphs import VertexUniverse


@pytest.fixture
def u2():
    return VertexUniverse.standard(2)


@pytest.fixture
def u3():
    return VertexUniverse.standard(3)


@pytest.fixture
def u4():
    return VertexUniverse.standard(4)


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
