"""Wave polynomials p_m, the Goursat formula, and generalized wave polynomials u_m.

Ordering: p_0 = 1, p_{2n-1} = Re (x + jt)^n, p_{2n} = Im (x + jt)^n with the
hyperbolic unit j^2 = 1, so p_1 = x, p_2 = t, p_3 = x^2 + t^2, p_4 = 2xt.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import PhiBasis, SampledFunction
from .errors import CapacityError, CompatibilityError, DomainError, InputError


@lru_cache(maxsize=None)
def binomial_row(n: int) -> np.ndarray:
    """C(n, 0..n) by the multiplicative recurrence, in floating point."""
    row = np.empty(n + 1)
    row[0] = 1.0
    for k in range(1, n + 1):
        row[k] = row[k - 1] * (n - k + 1) / k
    return row


def _split_index(m: int) -> tuple[int, int]:
    """(n, parity of k) such that p_m collects the terms t^k with k of that parity."""
    if m < 0:
        raise InputError(f"wave polynomial index must be >= 0, got {m}")
    if m == 0:
        return 0, 0
    return ((m + 1) // 2, 0) if m % 2 else (m // 2, 1)


def wave_poly(m: int, x, t):
    """Value of p_m at (x, t); broadcasts over array arguments."""
    n, parity = _split_index(m)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    row = binomial_row(n)
    out = np.zeros(np.broadcast(x, t).shape)
    for k in range(parity, n + 1, 2):
        out = out + row[k] * x ** (n - k) * t ** k
    return out[()] if out.ndim == 0 else out


def goursat_solution(phi: SampledFunction, psi: SampledFunction, x, t):
    """w(x, t) = phi((x+t)/2) + psi((x-t)/2) - phi(0), the solution of the wave
    equation with w = phi on x = t and w = psi on x = -t."""
    phi0 = phi(0.0)
    scale = max(abs(phi0), abs(psi(0.0)), 1.0)
    if abs(phi0 - psi(0.0)) > 1e-12 * scale:
        raise CompatibilityError("Goursat data must satisfy phi(0) = psi(0)")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    b = phi.b
    if np.any(np.abs(x) + np.abs(t) > 2 * b * (1 + 1e-12)):
        raise DomainError("point outside the square |x| + |t| <= 2b")
    return phi((x + t) / 2) + psi((x - t) / 2) - phi0


@dataclass(frozen=True)
class WaveCoefficients:
    """Coefficients a_0..a_M over p_m (or over u_m when paired with a basis)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if not np.all(np.isfinite(c)):
            raise InputError("wave coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    def __call__(self, x, t):
        """Evaluate sum_m a_m p_m(x, t)."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        xs, ts = np.broadcast_arrays(x, t)
        table = t_polynomial_table(self.coeffs)
        xpow = xs[..., None] ** np.arange(table.shape[0])
        return np.einsum("...j,...j->...", xpow, horner_t(table, ts))


def wave_expansion(alpha, beta) -> WaveCoefficients:
    """Wave-polynomial coefficients of the Goursat solution with power-series data
    phi = sum alpha_n x^n (on x = t) and psi = sum beta_n x^n (on x = -t)."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    beta = np.atleast_1d(np.asarray(beta, dtype=complex))
    scale = max(abs(alpha[0]), abs(beta[0]), 1.0)
    if abs(alpha[0] - beta[0]) > 1e-12 * scale:
        raise CompatibilityError("alpha_0 must equal beta_0")
    n = max(alpha.size, beta.size) - 1
    a = np.zeros(n + 1, dtype=complex)
    bb = np.zeros(n + 1, dtype=complex)
    a[: alpha.size] = alpha
    bb[: beta.size] = beta
    out = np.zeros(2 * n + 1, dtype=complex)
    out[0] = a[0]
    for k in range(1, n + 1):
        out[2 * k - 1] = (a[k] + bb[k]) / 2.0 ** k
        out[2 * k] = (a[k] - bb[k]) / 2.0 ** k
    return WaveCoefficients(out)


def t_polynomial_table(coeffs) -> np.ndarray:
    """Regroup sum_m a_m u_m as sum_j phi_j(x) * W_j(t).

    Returns W with ``W[j, k]`` the coefficient of ``phi_j(x) t^k`` (for plain
    wave polynomials read phi_j as x^j).
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    top = max((_split_index(m)[0] for m in range(max(coeffs.size - 2, 0), coeffs.size)), default=0)
    table = np.zeros((top + 1, top + 1), dtype=complex)
    for m, a in enumerate(coeffs):
        if a == 0:
            continue
        n, parity = _split_index(m)
        row = binomial_row(n)
        for k in range(parity, n + 1, 2):
            table[n - k, k] += a * row[k]
    return table


def horner_t(table: np.ndarray, t) -> np.ndarray:
    """Evaluate the polynomials W_j(t) of a t_polynomial_table; shape ``t.shape + (J,)``."""
    t = np.asarray(t, dtype=float)
    acc = np.zeros(t.shape + (table.shape[0],), dtype=complex)
    for k in range(table.shape[1] - 1, -1, -1):
        acc = acc * t[..., None] + table[:, k]
    return acc


def required_order(m: int) -> int:
    n, _ = _split_index(m)
    return n


def gen_wave_poly(basis: PhiBasis, m: int, x, t):
    """Value of the generalized wave polynomial u_m at (x, t), x in [-b, b]."""
    n, parity = _split_index(m)
    if n > basis.n_max:
        raise CapacityError(f"u_{m} needs basis order {n}, have {basis.n_max}")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    phis = basis.phi_at(x, n)
    row = binomial_row(n)
    out = np.zeros(np.broadcast(x, t).shape, dtype=complex)
    for k in range(parity, n + 1, 2):
        out = out + row[k] * phis[..., n - k] * t ** k
    return out[()] if out.ndim == 0 else out


def gen_wave_sum(basis: PhiBasis, coeffs, x, t):
    """sum_m a_m u_m(x, t) using Horner accumulation in t over phi_j(x)."""
    table = t_polynomial_table(coeffs)
    if table.shape[0] - 1 > basis.n_max:
        raise CapacityError(f"coefficients need basis order {table.shape[0] - 1}, have {basis.n_max}")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    xs, ts = np.broadcast_arrays(x, t)
    phis = basis.phi_at(xs, table.shape[0] - 1)
    out = np.einsum("...j,...j->...", phis, horner_t(table, ts))
    return out[()] if out.ndim == 0 else out
