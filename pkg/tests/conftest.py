import numpy as np
import pytest

from cayley.grid import GridSpec
from cayley.integrators import RngStream
from cayley.linear import LinearModel


@pytest.fixture
def small_model():
    return LinearModel(GridSpec(1.0, 5))


@pytest.fixture
def rng():
    return RngStream(12345)


def symplectic_form(dim):
    z = np.zeros((dim, dim))
    return np.block([[z, np.eye(dim)], [-np.eye(dim), z]])


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
