import numpy as np
import pytest

from chdg.grid_ops import Grid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def line64():
    return Grid.interval(64, 1.0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
