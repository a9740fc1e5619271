import numpy as np
import pytest

from twofluid.mesh import FESpace, build_uniform_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="module")
def space4():
    return FESpace(build_uniform_mesh(4, 4))


@pytest.fixture(scope="module")
def space8():
    return FESpace(build_uniform_mesh(8, 8))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
