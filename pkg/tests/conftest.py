import numpy as np
import pytest

from affine_lp.geometry import make_context


@pytest.fixture(scope="session")
def ctx10():
    return make_context(10, 2.0)


@pytest.fixture(scope="session")
def ctx8():
    return make_context(8, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
