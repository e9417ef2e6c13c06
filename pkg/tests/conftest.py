import numpy as np
import pytest

from gmdreg.objective import RegressionData

ACCEPTANCE_LINES = []


def random_spd(rng, n, cond=50.0):
    """Random SPD matrix with eigenvalues spread over [1, cond]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.geomspace(1.0, cond, n)
    m = (q * lam) @ q.T
    return 0.5 * (m + m.T)


def study_design(rng, n, p=4):
    return np.column_stack([np.ones(n), rng.uniform(0, 50, (n, p - 1))])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_data(rng):
    X = study_design(rng, 20, 3)
    y = X @ np.array([1.0, -0.5, 0.25]) + rng.normal(0, 2, 20)
    return RegressionData(X, y)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
