import numpy as np
import pytest

from hyplab import group as grp
from hyplab import measure as msr

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def model():
    return grp.build_schottky(grp.REFERENCE_DISKS)


@pytest.fixture(scope="session")
def catalog(model):
    return grp.enumerate_orbit(model, max_dist=14.0)


@pytest.fixture(scope="session")
def alpha(catalog):
    return grp.estimate_alpha(catalog).value


@pytest.fixture(scope="session")
def partition():
    return msr.BoundaryPartition(4096)


@pytest.fixture(scope="session")
def mu(catalog, alpha, partition):
    return msr.patterson_measure(catalog, alpha, msr.DEFAULT_S_OFFSET, partition)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
