import numpy as np
import pytest

from supermesh import Mesh, generate_mesh


@pytest.fixture
def unit_triangle():
    return Mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])


@pytest.fixture
def corner_tet():
    return Mesh([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 1, 2, 3]])


@pytest.fixture(scope="session")
def pair2d():
    return generate_mesh(2, 12, 0.2, seed=3, offset=2), generate_mesh(2, 6, 0.2, seed=3, offset=1)


@pytest.fixture(scope="session")
def pair3d():
    return generate_mesh(3, 4, 0.2, seed=5, offset=2), generate_mesh(3, 2, 0.2, seed=5, offset=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record the outcome of one acceptance criterion."""
    def record(k, ok, detail):
        _ACCEPTANCE[k] = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} - {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
