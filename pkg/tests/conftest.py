import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pwqcont.cones import build_partition
from pwqcont.continuity import PwqFunction
from pwqcont.io import fixture_path, load_fixture
from pwqcont.lyapunov import ConewiseLinearSystem

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


A_STIFF = np.array([[0.0, 1.0], [-6.0, -2.0]])
A_SOFT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def fan(angles, m_cones=None):
    """Partition of R^2 by rays at the given (sorted) angles, consecutive pairs as cones."""
    angles = np.asarray(angles, dtype=float)
    rays = np.vstack([np.cos(angles), np.sin(angles)])
    k = len(angles)
    cones = [[a + 1, (a + 1) % k + 1] for a in range(k if m_cones is None else m_cones)]
    return build_partition(rays, cones)


def octants():
    rays = np.hstack([np.eye(3), -np.eye(3)])
    cones = [[1 if sx > 0 else 4, 2 if sy > 0 else 5, 3 if sz > 0 else 6]
             for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)]
    return build_partition(rays, cones)


@pytest.fixture
def ex1():
    from pwqcont.cones import partition_from_dict
    return partition_from_dict(load_fixture("ex1_partition"))


@pytest.fixture
def ex1_pwq():
    return PwqFunction.from_dict(load_fixture("ex1_pwq"))


@pytest.fixture
def fan8():
    return fan(np.arange(8) * np.pi / 4)


@pytest.fixture
def ex2_system():
    return ConewiseLinearSystem.from_dict(load_fixture("ex2_system"))


@pytest.fixture
def ex2_rounded():
    return PwqFunction.from_dict(load_fixture("ex2_pwq_rounded"))


@pytest.fixture
def fixture_file():
    return fixture_path
