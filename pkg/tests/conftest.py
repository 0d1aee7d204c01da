import numpy as np
import pytest

HALF_INTEGERS = [0.5, 1.5, 2.5, 3.5, 4.5]
ALL_F = [0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_ket(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS, key=lambda k: int(k.split()[0][1:])):
            terminalreporter.write_line(RESULTS[key])
