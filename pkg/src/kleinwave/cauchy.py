"""Cauchy problem u_xx - u_tt - q(x) u = 0, u(x, 0) = g, u_t(x, 0) = h.

The data are approximated by f-polynomials P = sum alpha_k phi_k and
Q = sum beta_k phi_k; the solution is the matching combination of generalized
wave polynomials, valid on the triangle |x| + t <= b, t >= 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .approx import approximate
from .basis import (
    DEFAULT_BASIS_CAP,
    FPolynomial,
    PhiBasis,
    SampledFunction,
    build_basis,
    check_same_grid,
)
from .errors import ConfigError, InputError
from .spps import nonvanishing_solution, spectral_taylor_coefficients
from .transmute import norm_bound
from .wavepoly import gen_wave_sum

log = logging.getLogger(__name__)

STRATEGIES = ("taylor", "remez", "lp")
MESH_DIVISIONS = 200


@dataclass(frozen=True)
class CauchyProblem:
    """Data of the Cauchy problem on [-b, b].

    ``f_slope`` is f'(0) for the particular solution behind the basis.
    ``g_spectral``/``h_spectral`` are optional ``(lambda, v(0), v'(0))`` with
    ``v'' - q v = lambda v``; they enable the taylor strategy.
    """

    q: SampledFunction
    g: SampledFunction
    h_data: SampledFunction
    f_slope: complex = 0.0
    g_spectral: tuple[complex, complex, complex] | None = None
    h_spectral: tuple[complex, complex, complex] | None = None
    exact: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = "problem"

    def __post_init__(self):
        check_same_grid(self.q, self.g, self.h_data)

    @property
    def b(self) -> float:
        return self.q.b


@dataclass(frozen=True)
class ErrorCertificate:
    eps1: float
    eps2: float
    normT_bound: float
    normTinv_bound: float
    b: float
    total: float

    def as_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in
                ("eps1", "eps2", "normT_bound", "normTinv_bound", "b", "total")}


def error_certificate(eps1: float, eps2: float, q: SampledFunction, h_scalar: complex,
                      b: float | None = None) -> ErrorCertificate:
    """Bound ||T|| ||T^-1|| (eps1 + eps2 b) on the solution error, both norms
    bounded by the same Bessel-function estimate."""
    if eps1 < 0 or eps2 < 0 or not (np.isfinite(eps1) and np.isfinite(eps2)):
        raise InputError("data errors must be finite and nonnegative")
    b = q.b if b is None else float(b)
    nb = norm_bound(q, h_scalar, b)
    return ErrorCertificate(float(eps1), float(eps2), nb, nb, b, nb * nb * (eps1 + eps2 * b))


def assemble_coefficients(alpha, beta) -> np.ndarray:
    """Wave-polynomial coefficients: a_0 = alpha_0, a_{2m-1} = alpha_m,
    a_{2(m+1)} = beta_m / (m + 1)."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    beta = np.atleast_1d(np.asarray(beta, dtype=complex))
    if alpha.size == 0:
        raise InputError("alpha must contain alpha_0")
    size = max(2 * alpha.size - 1, 2 * beta.size + 1 if beta.size else 1)
    a = np.zeros(size, dtype=complex)
    a[0] = alpha[0]
    m = np.arange(1, alpha.size)
    a[2 * m - 1] = alpha[1:]
    m = np.arange(beta.size)
    a[2 * (m + 1)] = beta / (m + 1)
    return a


@dataclass(frozen=True, eq=False)
class GeneralizedWaveSolution:
    basis: PhiBasis
    a: np.ndarray
    certificate: ErrorCertificate
    g_poly: FPolynomial
    h_poly: FPolynomial
    q: SampledFunction
    strategy: str = "taylor"
    info: dict = field(default_factory=dict)

    @property
    def b(self) -> float:
        return self.basis.b

    def __call__(self, x, t):
        return gen_wave_sum(self.basis, self.a, x, t)


@dataclass(frozen=True)
class Mesh:
    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    step: float


def _approx_data(data: SampledFunction, spectral, basis: PhiBasis, strategy: str, n: int,
                 label: str, **kw) -> tuple[FPolynomial, dict]:
    if strategy == "taylor":
        if spectral is None:
            raise ConfigError(f"taylor strategy needs spectral data (lambda, v(0), v'(0)) for {label}")
        lam, v0, v0p = spectral
        coeffs = spectral_taylor_coefficients(lam, v0, v0p, basis.h, n)
        return FPolynomial(basis, coeffs), {"method": "taylor"}
    res = approximate(data, basis, n, strategy, **kw)
    info = {"method": res.method, "E": res.E, "D": res.D, "iterations": res.iterations,
            "converged": res.converged}
    if not res.converged:
        log.warning("%s approximation stopped before the stopping rule (D=%.3e, |E|=%.3e)",
                    label, res.D, abs(res.E))
    return res.poly, info


def solve(problem: CauchyProblem, strategy: str = "remez", n: int = 12, n_h: int | None = None,
          basis: PhiBasis | None = None, cap: int = DEFAULT_BASIS_CAP, **approx_kw
          ) -> GeneralizedWaveSolution:
    """Approximate g by P_n and h by Q_{n_h} (default n_h = n - 1) and assemble
    the generalized wave polynomial solution with its error certificate."""
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; choose from {', '.join(STRATEGIES)}")
    if n < 0:
        raise ConfigError(f"order n must be >= 0, got {n}")
    n_h = max(n - 1, 0) if n_h is None else n_h
    if n_h < 0:
        raise ConfigError(f"order n_h must be >= 0, got {n_h}")
    order = max(n, n_h + 1)
    if basis is None:
        f, h_used = nonvanishing_solution(problem.q, problem.f_slope)
        basis = build_basis(f, order, h=h_used, cap=cap)
    elif basis.n_max < order:
        raise ConfigError(f"supplied basis has order {basis.n_max}, {order} needed")
    P, g_info = _approx_data(problem.g, problem.g_spectral, basis, strategy, n, "g", **approx_kw)
    Q, h_info = _approx_data(problem.h_data, problem.h_spectral, basis, strategy, n_h, "h", **approx_kw)
    eps1 = float(np.max(np.abs(problem.g.values - P.grid_values())))
    eps2 = float(np.max(np.abs(problem.h_data.values - Q.grid_values())))
    cert = error_certificate(eps1, eps2, problem.q, basis.h, problem.b)
    a = assemble_coefficients(P.coeffs, Q.coeffs)
    info = {"n_g": n, "n_h": n_h, "g": g_info, "h": h_info}
    return GeneralizedWaveSolution(basis, a, cert, P, Q, problem.q, strategy, info)


def triangle_points(b: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Uniform mesh of the closed triangle |x| + t <= b, t >= 0 (x-major order by rows of t)."""
    if step <= 0 or not np.isfinite(step):
        raise InputError("mesh step must be positive")
    k = int(round(b / step))
    if abs(k * step - b) > 1e-9 * b:
        k = int(np.floor(b / step))
    i = np.arange(-k, k + 1)
    xs, ts = [], []
    for j in range(k + 1):
        row = i[np.abs(i) + j <= k]
        xs.append(row * step)
        ts.append(np.full(row.size, j * step))
    return np.concatenate(xs), np.concatenate(ts)


def evaluate_on_triangle(sol: GeneralizedWaveSolution, step: float | None = None) -> Mesh:
    step = sol.b / MESH_DIVISIONS if step is None else float(step)
    x, t = triangle_points(sol.b, step)
    x = np.clip(x, -sol.b, sol.b)
    return Mesh(x, t, sol(x, t), step)


def residual_check(sol: GeneralizedWaveSolution, step: float) -> float:
    """Max |u_xx - u_tt - q u| by 5-point differences over interior mesh points."""
    q = sol.q
    x, t = triangle_points(sol.b, step)
    inner = (t >= step * (1 - 1e-9)) & (np.abs(x) + t + step <= sol.b * (1 + 1e-12))
    x, t = x[inner], t[inner]
    if x.size == 0:
        return 0.0
    u0 = sol(x, t)
    uxx = (sol(x + step, t) - 2 * u0 + sol(x - step, t)) / step**2
    utt = (sol(x, t + step) - 2 * u0 + sol(x, t - step)) / step**2
    return float(np.max(np.abs(uxx - utt - q(x) * u0)))


def solution_error(sol: GeneralizedWaveSolution, exact: Callable, mesh: Mesh | None = None) -> float:
    mesh = evaluate_on_triangle(sol) if mesh is None else mesh
    return float(np.max(np.abs(mesh.values - exact(mesh.x, mesh.t))))
