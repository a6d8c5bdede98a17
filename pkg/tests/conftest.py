import numpy as np
import pytest

from kleinwave.basis import SampledFunction, build_basis
from kleinwave.spps import particular_solution


def make_basis(q_func, b, n, h=0.0, N=None):
    q = SampledFunction.from_callable(q_func, b, n=N)
    return build_basis(particular_solution(q, h), n, h=h)


@pytest.fixture(scope="session")
def flat_basis():
    """f = 1 on [-1, 1]: phi_k = x^k."""
    return make_basis(lambda x: 0 * x, 1.0, 20)


@pytest.fixture(scope="session")
def exp3_basis():
    """q = 9, h = 3 on [-2, 2]: f = e^{3x}."""
    return make_basis(lambda x: 9.0 + 0 * x, 2.0, 51, h=3.0)


@pytest.fixture(scope="session")
def x2_basis():
    return make_basis(lambda x: x * x, 1.0, 20)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
