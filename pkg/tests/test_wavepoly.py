import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kleinwave.basis import SampledFunction
from kleinwave.cauchy import triangle_points
from kleinwave.errors import CapacityError, CompatibilityError, DomainError
from kleinwave.wavepoly import (
    binomial_row,
    gen_wave_poly,
    gen_wave_sum,
    goursat_solution,
    wave_expansion,
    wave_poly,
)


def test_binomial_row():
    from math import comb

    for n in (0, 1, 7, 30):
        assert np.allclose(binomial_row(n), [comb(n, k) for k in range(n + 1)], rtol=1e-15)


class TestWavePoly:
    def test_low_orders(self):
        x, t = 0.7, -1.3
        assert wave_poly(0, x, t) == 1
        assert wave_poly(1, x, t) == x
        assert wave_poly(2, x, t) == t
        assert wave_poly(3, x, t) == pytest.approx(x * x + t * t)
        assert wave_poly(4, x, t) == pytest.approx(2 * x * t)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_characteristic_powers(self, n, rng):
        x, t = rng.uniform(-2, 2, (2, 40))
        assert np.allclose(wave_poly(2 * n - 1, x, t) + wave_poly(2 * n, x, t), (x + t) ** n, atol=1e-12)
        assert np.allclose(wave_poly(2 * n - 1, x, t) - wave_poly(2 * n, x, t), (x - t) ** n, atol=1e-12)

    @pytest.mark.parametrize("m", range(0, 13))
    def test_parity_in_t(self, m, rng):
        x, t = rng.uniform(-1, 1, (2, 20))
        sign = -1 if m and m % 2 == 0 else 1
        assert np.allclose(wave_poly(m, x, -t), sign * wave_poly(m, x, t), atol=1e-14)

    @pytest.mark.parametrize("m", range(0, 13))
    def test_wave_equation(self, m, rng):
        """Second differences of a polynomial of degree <= 6 in x and t are exact up to roundoff."""
        x, t = rng.uniform(-1, 1, (2, 20))
        d = 1e-3
        uxx = wave_poly(m, x + d, t) - 2 * wave_poly(m, x, t) + wave_poly(m, x - d, t)
        utt = wave_poly(m, x, t + d) - 2 * wave_poly(m, x, t) + wave_poly(m, x, t - d)
        assert np.max(np.abs(uxx - utt)) / d**2 < 1e-6 * (1 + m)


class TestGoursat:
    def test_constant(self):
        c = SampledFunction.constant(2.5, 1.0, n=100)
        assert np.allclose(goursat_solution(c, c, [0.3, -1.0], [0.2, 0.9]), 2.5)

    def test_linear(self, rng):
        phi = SampledFunction.from_callable(lambda x: x, 1.0, n=100)
        psi = SampledFunction.constant(0.0, 1.0, n=100)
        x, t = rng.uniform(-0.9, 0.9, (2, 30)) * 0.5
        assert np.allclose(goursat_solution(phi, psi, x, t), (x + t) / 2, atol=1e-15)

    def test_compatibility(self):
        phi = SampledFunction.constant(1.0, 1.0, n=100)
        psi = SampledFunction.constant(0.0, 1.0, n=100)
        with pytest.raises(CompatibilityError):
            goursat_solution(phi, psi, 0.0, 0.0)

    def test_domain(self):
        c = SampledFunction.constant(1.0, 1.0, n=100)
        with pytest.raises(DomainError):
            goursat_solution(c, c, 1.5, 1.0)

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.floats(-2, 2), min_size=7, max_size=7),
           st.lists(st.floats(-2, 2), min_size=6, max_size=6))
    def test_power_series_data(self, alpha, beta_tail):
        """Random degree-6 data: the expansion agrees with the Goursat formula."""
        beta = [alpha[0]] + beta_tail
        phi = SampledFunction.from_callable(lambda s: np.polyval(alpha[::-1], s), 1.0, n=2000)
        psi = SampledFunction.from_callable(lambda s: np.polyval(beta[::-1], s), 1.0, n=2000)
        rng = np.random.default_rng(0)
        x, t = rng.uniform(-1, 1, (2, 40))
        w = wave_expansion(alpha, beta)
        scale = 1 + sum(abs(a) for a in alpha) + sum(abs(b) for b in beta)
        assert np.max(np.abs(w(x, t) - goursat_solution(phi, psi, x, t))) <= 1e-12 * scale


class TestWaveExpansion:
    def test_constant(self):
        c = wave_expansion([1.0], [1.0]).coeffs
        assert c[0] == 1 and np.all(c[1:] == 0)

    def test_first_order(self):
        c = wave_expansion([0, 1], [0, 0]).coeffs
        assert np.allclose(c, [0, 0.5, 0.5])

    def test_incompatible(self):
        with pytest.raises(CompatibilityError):
            wave_expansion([1.0, 2.0], [0.0])


class TestGenWavePoly:
    def test_u0_is_f(self, x2_basis):
        x = np.linspace(-1, 1, 11)
        for t in (0.0, 0.4, -0.7):
            assert np.allclose(gen_wave_poly(x2_basis, 0, x, t), x2_basis.f(x))

    @pytest.mark.parametrize("n", range(1, 6))
    def test_initial_relations(self, x2_basis, n):
        x = x2_basis.grid[::50]
        assert np.allclose(gen_wave_poly(x2_basis, 2 * n - 1, x, 0.0), x2_basis.phi[n].values[::50], atol=1e-15)
        assert np.all(gen_wave_poly(x2_basis, 2 * n, x, 0.0) == 0)
        d = 1e-5
        dt = (gen_wave_poly(x2_basis, 2 * n, x, d) - gen_wave_poly(x2_basis, 2 * n, x, -d)) / (2 * d)
        assert np.allclose(dt, n * x2_basis.phi[n - 1].values[::50], atol=1e-8)

    def test_flat_basis_reduces_to_wave_polys(self, flat_basis):
        x, t = triangle_points(1.0, 0.05)
        err = max(np.max(np.abs(gen_wave_poly(flat_basis, m, x, t) - wave_poly(m, x, t))) for m in range(13))
        assert err <= 1e-10

    def test_capacity(self, x2_basis):
        with pytest.raises(CapacityError):
            gen_wave_poly(x2_basis, 2 * x2_basis.n_max + 1, 0.0, 0.0)

    @pytest.mark.parametrize("m", range(0, 13))
    def test_pde_residual(self, exp3_basis, m):
        """5-point residual of u_xx - u_tt - 9u on a sample of interior triangle mesh points."""
        b, step = exp3_basis.b, 0.00125
        k = int(round(b / step))
        sample = np.random.default_rng(m)
        j = sample.integers(1, k - 1, 20000)
        i = sample.integers(-k, k + 1, 20000)
        keep = np.abs(i) + j + 1 <= k
        x, t = i[keep] * step, j[keep] * step
        u = lambda x, t: gen_wave_poly(exp3_basis, m, x, t)
        u0 = u(x, t)
        res = (u(x + step, t) + u(x - step, t) - u(x, t + step) - u(x, t - step)) / step**2 - 9.0 * u0
        norm = np.max(np.abs(gen_wave_poly(exp3_basis, m, *triangle_points(b, 0.05))))
        assert np.max(np.abs(res)) <= 1e-4 * norm

    def test_sum_is_linear(self, x2_basis, rng):
        a = rng.normal(size=9)
        x, t = rng.uniform(-0.5, 0.5, (2, 15))
        ref = sum(a[m] * gen_wave_poly(x2_basis, m, x, t) for m in range(9))
        assert np.allclose(gen_wave_sum(x2_basis, a, x, t), ref, atol=1e-13)
