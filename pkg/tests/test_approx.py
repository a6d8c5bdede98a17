import dataclasses

import numpy as np
import pytest
from scipy.optimize import linprog

import kleinwave.approx as approx_mod
from kleinwave.approx import (
    HaarWarning,
    ReferenceSet,
    RemezStagnationError,
    approximate,
    initial_reference,
    lsq_approx,
    minimax_lp,
    remez,
    select_degree,
    tchebyshev_interpolation,
)
from kleinwave.basis import FPolynomial, SampledFunction, build_basis
from kleinwave.errors import CapacityError, HaarViolationError, InputError
from kleinwave.spps import particular_solution

from conftest import make_basis


@pytest.fixture(scope="module")
def ex1_basis():
    return make_basis(lambda x: 9.0 + 0 * x, 2.0, 20, h=3.0)


@pytest.fixture(scope="module")
def ex1_g(ex1_basis):
    return ex1_basis.f.like(np.cosh(np.sqrt(8) * ex1_basis.grid))


def brute_force_minimax(g, basis, n, pts=801):
    """Discrete minimax on a subgrid by scipy's LP solver (independent oracle).

    The LP is posed for the correction to a least-squares fit over orthonormal
    columns and rescaled to O(1), so HiGHS tolerances do not mask tiny errors.
    """
    idx = np.linspace(0, basis.f.N, pts).round().astype(int)
    Q, _ = np.linalg.qr(basis.phi_matrix(n)[idx].real)
    gv = g.values[idx].real
    r = gv - Q @ (Q.T @ gv)
    scale = np.max(np.abs(r))
    r = r / scale
    # variables (d, E); minimize E s.t. +-(r - Q d) <= E
    A = np.vstack([np.hstack([-Q, -np.ones((pts, 1))]), np.hstack([Q, -np.ones((pts, 1))])])
    rhs = np.concatenate([-r, r])
    cost = np.zeros(n + 2)
    cost[-1] = 1
    res = linprog(cost, A_ub=A, b_ub=rhs, bounds=[(None, None)] * (n + 1) + [(0, None)], method="highs")
    assert res.status == 0
    return res.fun * scale


class TestReferenceSet:
    def test_valid(self):
        r = ReferenceSet([-1, 0, 1])
        assert len(r) == 3 and r.degree == 1

    @pytest.mark.parametrize("pts", [[0.0, 0.0, 1.0], [1.0, 0.0], [0.0], [0.0, np.nan]])
    def test_invalid(self, pts):
        with pytest.raises(InputError):
            ReferenceSet(pts)


class TestTchebyshevInterpolation:
    def test_two_points(self, flat_basis):
        c, E = tchebyshev_interpolation([0.0, 2.0], ReferenceSet([-1, 1]), flat_basis, 0)
        assert c[0] == pytest.approx(1.0) and E == pytest.approx(-1.0)

    def test_x_squared(self, flat_basis):
        c, E = tchebyshev_interpolation([1.0, 0.0, 1.0], ReferenceSet([-1, 0, 1]), flat_basis, 1)
        assert np.allclose(c, [0.5, 0.0], atol=1e-15) and E == pytest.approx(0.5)

    def test_span_exact(self, x2_basis, rng):
        coeffs = rng.normal(size=6)
        ref = ReferenceSet(np.sort(rng.uniform(-1, 1, 7)))
        vals = FPolynomial(x2_basis, coeffs)(ref.points).real
        c, E = tchebyshev_interpolation(vals, ref, x2_basis, 5)
        assert abs(E) < 1e-12 and np.allclose(c, coeffs, atol=1e-9)

    def test_size_mismatch(self, flat_basis):
        with pytest.raises(InputError):
            tchebyshev_interpolation([0, 1, 2], ReferenceSet([-1, 0, 1]), flat_basis, 2)

    def test_complex_rejected(self, flat_basis):
        with pytest.raises(InputError):
            tchebyshev_interpolation([0, 1j, 2], ReferenceSet([-1, 0, 1]), flat_basis, 1)

    def test_haar_violation(self, flat_basis):
        dependent = dataclasses.replace(flat_basis, phi=(flat_basis.phi[0],) * 3, _matrix=None)
        with pytest.raises(HaarViolationError):
            tchebyshev_interpolation([1.0, 0.0, 1.0, 0.0], ReferenceSet([-1, 0, 0.5, 1]), dependent, 2)


class TestInitialReference:
    def test_chebyshev_unit(self, flat_basis):
        assert np.allclose(initial_reference("chebyshev", flat_basis, 1).points, [-1, 0, 1], atol=1e-15)

    def test_chebyshev_b2(self, ex1_basis):
        assert np.allclose(initial_reference("chebyshev", ex1_basis, 2).points, [-2, -1, 1, 2], atol=1e-15)

    def test_lsq_extrema(self, ex1_basis, ex1_g):
        ref = initial_reference("lsq_extrema", ex1_basis, 6, ex1_g)
        assert len(ref) == 8 and ref.points[0] >= -2 and ref.points[-1] <= 2

    def test_lsq_extrema_fallback(self, x2_basis):
        g = x2_basis.phi[2]
        with pytest.warns(RuntimeWarning):
            ref = initial_reference("lsq_extrema", x2_basis, 3, g)
        assert np.allclose(ref.points, initial_reference("chebyshev", x2_basis, 3).points)

    def test_unknown(self, flat_basis):
        with pytest.raises(InputError):
            initial_reference("uniform", flat_basis, 2)


class TestRemez:
    @pytest.mark.parametrize("exchange", ["single", "general"])
    def test_x_squared(self, flat_basis, exchange):
        g = flat_basis.phi[2]
        r = remez(g, flat_basis, 1, exchange=exchange)
        assert r.D == pytest.approx(0.5, abs=1e-8)
        assert np.allclose(r.poly.coeffs, [0.5, 0.0], atol=1e-8)
        assert np.allclose(r.reference.points, [-1, 0, 1], atol=1e-4)

    def test_span_exact(self, x2_basis, rng):
        g = FPolynomial(x2_basis, rng.normal(size=5)).as_sampled()
        r = remez(g, x2_basis, 4)
        assert r.D <= 1e-12 and r.iterations == 1

    @pytest.mark.parametrize("exchange", ["single", "general"])
    def test_example_1_g(self, ex1_basis, ex1_g, exchange):
        r = remez(ex1_g, ex1_basis, 11, exchange=exchange)
        assert r.converged and r.D < 1e-8
        Es = [e for e, _ in r.history]
        assert all(b >= a * (1 - 1e-12) for a, b in zip(Es, Es[1:]))
        # sandwich with an independent minimax over all grid nodes; the node
        # set misses the true extrema by at most O(step^2)
        mm = brute_force_minimax(ex1_g, ex1_basis, 11, pts=ex1_basis.f.N + 1)
        assert abs(r.E) <= mm * (1 + 1e-4) and mm <= r.D * (1 + 1e-9)

    def test_example_1_h(self, ex1_basis):
        g = ex1_basis.f.like(np.ones(ex1_basis.f.N + 1))
        r = approximate(g, ex1_basis, 18)
        assert r.D < 1e-7

    def test_complex_rejected(self, ex1_basis):
        g = ex1_basis.f.like(np.exp(1j * ex1_basis.grid))
        with pytest.raises(InputError, match="minimax_lp"):
            remez(g, ex1_basis, 4)

    @pytest.fixture
    def shrinking_E(self, monkeypatch):
        """Make |E| fall after the first iteration, as happens at the precision floor."""
        real = approx_mod.tchebyshev_interpolation
        calls = []

        def fake(*args, **kw):
            c, E = real(*args, **kw)
            calls.append(E)
            return c, E * 0.5 ** (len(calls) - 1)

        monkeypatch.setattr(approx_mod, "tchebyshev_interpolation", fake)

    def test_stagnation_raises_with_result(self, x2_basis, shrinking_E):
        g = x2_basis.f.like(np.exp(x2_basis.grid))
        with pytest.raises(RemezStagnationError) as info:
            remez(g, x2_basis, 3)
        res = info.value.result
        assert not res.converged and len(res.history) == 2
        assert res.D == min(d for _, d in res.history)

    def test_stagnation_return(self, x2_basis, shrinking_E):
        g = x2_basis.f.like(np.exp(x2_basis.grid))
        r = remez(g, x2_basis, 3, on_stagnation="return")
        assert not r.converged and r.D == min(d for _, d in r.history)

    def test_rounding_level_stop(self, ex1_basis, ex1_g):
        r = remez(ex1_g, ex1_basis, 11)
        assert r.converged and r.D - abs(r.E) <= 1e-15 * ex1_g.max_abs()

    def test_degree_monotone(self, ex1_basis, ex1_g):
        Ds = [remez(ex1_g, ex1_basis, n).D for n in range(2, 12)]
        assert all(b <= a * (1 + 1e-9) for a, b in zip(Ds, Ds[1:]))

    def test_superalgebraic_decay(self, ex1_basis, ex1_g):
        assert remez(ex1_g, ex1_basis, 16, on_stagnation="return").D < remez(ex1_g, ex1_basis, 8).D / 100

    def test_capacity(self, flat_basis):
        with pytest.raises(CapacityError):
            remez(flat_basis.phi[2], flat_basis, 30)


class TestMinimaxLP:
    def test_x_squared(self, flat_basis):
        r = minimax_lp(flat_basis.phi[2], flat_basis, 1)
        assert r.D == pytest.approx(0.5, abs=1e-6)

    def test_span(self, x2_basis, rng):
        g = FPolynomial(x2_basis, rng.normal(size=4)).as_sampled()
        assert minimax_lp(g, x2_basis, 3).D <= 1e-10

    def test_agrees_with_remez(self, ex1_basis, ex1_g):
        lp = minimax_lp(ex1_g, ex1_basis, 11)
        rz = remez(ex1_g, ex1_basis, 11)
        assert abs(lp.D - rz.D) <= 1e-8

    def test_complex_data(self):
        basis = make_basis(lambda x: -25.0 + 0 * x, 2.0, 14, h=5j)
        g = basis.f.like(np.cos(np.sqrt(26) * basis.grid))
        r = minimax_lp(g, basis, 14)
        lsq = approximate(g, basis, 14, "lsq")
        assert r.D < 1e-6 and r.D <= lsq.D

    def test_complex_exact_recovery(self):
        basis = make_basis(lambda x: -25.0 + 0 * x, 1.0, 5, h=5j)
        coeffs = np.array([1, 2j, -1, 0.5, 0.25j, 0.1])
        g = FPolynomial(basis, coeffs).as_sampled()
        assert minimax_lp(g, basis, 5).D <= 1e-10

    def test_bad_args(self, flat_basis):
        with pytest.raises(InputError):
            minimax_lp(flat_basis.phi[2], flat_basis, 4, grid_N=5)
        with pytest.raises(InputError):
            minimax_lp(flat_basis.phi[2], flat_basis, 1, angles_m=2)


class TestLeastSquares:
    def test_span(self, x2_basis, rng):
        coeffs = rng.normal(size=5)
        p = lsq_approx(FPolynomial(x2_basis, coeffs).as_sampled(), x2_basis, 4)
        assert np.allclose(p.coeffs, coeffs, atol=1e-10)

    def test_x_squared_constant(self, flat_basis):
        p = lsq_approx(flat_basis.phi[2], flat_basis, 1)
        assert abs(p.coeffs[0] - 1 / 3) <= 1e-3

    def test_orthogonal_residual(self, x2_basis):
        g = x2_basis.f.like(np.sin(3 * x2_basis.grid))
        p = lsq_approx(g, x2_basis, 5)
        P = x2_basis.phi_matrix(5)
        r = g.values - p.grid_values()
        assert np.max(np.abs(P.conj().T @ r)) <= 1e-10 * np.linalg.norm(P) * np.linalg.norm(g.values)

    def test_worse_than_remez(self, ex1_basis, ex1_g):
        lsq = approximate(ex1_g, ex1_basis, 11, "lsq")
        assert lsq.D >= remez(ex1_g, ex1_basis, 11).D

    def test_rank_warning(self, flat_basis):
        dependent = dataclasses.replace(flat_basis, phi=(flat_basis.phi[0],) * 3, _matrix=None)
        with pytest.warns(HaarWarning):
            lsq_approx(flat_basis.phi[1], dependent, 2)


def test_approximate_unknown_method(flat_basis):
    with pytest.raises(InputError):
        approximate(flat_basis.phi[1], flat_basis, 1, "newton")


def test_select_degree(ex1_basis, ex1_g):
    r = select_degree(ex1_g, ex1_basis, 4, 20)
    assert 9 <= r.poly.degree <= 20 and r.D < 1e-8
