from __future__ import annotations

import numpy as np
import pytest

from theta_kummer import PeriodMatrix, genus2_pipeline, sample_siegel


@pytest.fixture
def pm1():
    return PeriodMatrix([[1j]])


@pytest.fixture
def pm2():
    return sample_siegel(2, 7, 0.3)


@pytest.fixture
def pm3():
    return sample_siegel(3, 11, 0.3)


@pytest.fixture(scope="session")
def pipelines():
    """A few genus-2 pipeline runs shared by the slower tests."""
    return [genus2_pipeline(sample_siegel(2, s, 0.3), s) for s in range(3)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
