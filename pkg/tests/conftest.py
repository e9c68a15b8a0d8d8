import numpy as np
import pytest

from chenlag.tensor_core import from_components


@pytest.fixture
def h112():
    """n = 3 tensor whose only free entry is (1, 1, 2) = 1."""
    return from_components(3, [((1, 1, 2), 1.0)])


@pytest.fixture
def h111():
    return from_components(3, [((1, 1, 1), 1.0)])


def pytest_terminal_summary(terminalreporter, config):
    from test_acceptance import ACCEPTANCE_KEY

    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
