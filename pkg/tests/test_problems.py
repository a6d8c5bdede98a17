import numpy as np
import pytest

from kleinwave.errors import ConfigError
from kleinwave.problems import EXACT, EXAMPLES, EXPRESSIONS, SPECTRAL, example, exact_solution, expression


def _d2(f, x, d=1e-3):
    return (f(x + d) - 2 * f(x) + f(x - d)) / d**2


@pytest.mark.parametrize("name", sorted(EXAMPLES))
def test_exact_solution_solves_cauchy_problem(name):
    ex = EXAMPLES[name]
    u = EXACT[ex.exact]
    q, g, h = (EXPRESSIONS[k] for k in (ex.q, ex.g, ex.h))
    x = np.linspace(-ex.b / 2, ex.b / 2, 21)
    assert np.allclose(u(x, 0.0), g(x), atol=1e-14)
    d = 1e-6
    assert np.allclose((u(x, d) - u(x, -d)) / (2 * d), h(x), atol=1e-7)
    t = 0.3 * ex.b
    d = 1e-3
    uxx = (u(x + d, t) - 2 * u(x, t) + u(x - d, t)) / d**2
    utt = (u(x, t + d) - 2 * u(x, t) + u(x, t - d)) / d**2
    assert np.max(np.abs(uxx - utt - q(x) * u(x, t))) < 1e-4 * (1 + np.max(np.abs(u(x, t))))


@pytest.mark.parametrize("key", sorted(SPECTRAL))
def test_spectral_data(key):
    """v'' - q v = lambda v with the declared v(0), v'(0)."""
    lam, v0, v0p = SPECTRAL[key]
    v = EXPRESSIONS[key]
    q = EXPRESSIONS[key.split("_")[0] + "_q"]
    x = np.linspace(-1, 1, 11)
    assert np.allclose(_d2(v, x) - q(x) * v(x), lam * v(x), atol=1e-4 * (1 + np.max(np.abs(v(x)))))
    assert v(np.array(0.0)) == pytest.approx(v0, abs=1e-15)
    assert (v(np.array(1e-7)) - v(np.array(-1e-7))) / 2e-7 == pytest.approx(v0p, abs=1e-7)


def test_ex3_erratum_factor():
    """Without 1/sqrt(3) the time derivative at t = 0 would be sqrt(3) h."""
    g, h = EXPRESSIONS["ex3_g"], EXPRESSIONS["ex3_h"]
    wrong = lambda x, t: g(x) * np.cosh(t) + h(x) * np.sinh(np.sqrt(3) * t)
    x = np.array([0.5])
    d = 1e-6
    assert (wrong(x, d) - wrong(x, -d)) / (2 * d) == pytest.approx(np.sqrt(3) * h(x), rel=1e-8)


def test_unknown_ids():
    for fn in (expression, exact_solution, example):
        with pytest.raises(ConfigError):
            fn("nope")


def test_expressions_vectorized():
    x = np.linspace(-1, 1, 5)
    for fn in EXPRESSIONS.values():
        assert np.shape(fn(x)) == x.shape
