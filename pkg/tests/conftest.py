import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from afgauss.hyperbolic_disk import DiskGrid

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_grid():
    return DiskGrid(24, 48, 8.0)


@pytest.fixture(scope="session")
def mid_grid():
    return DiskGrid(48, 96, 8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20241015)


def convergence_order(errors):
    e = np.asarray(errors, dtype=float)
    return np.log2(e[:-1] / e[1:])


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


def record_criterion(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
