"""Particular solutions of f'' = q f and spectral parameter power series (SPPS).

The particular solution comes from Picard iteration on the Volterra form

    f(x) = v0 + v0' x + int_0^x (x - s) q(s) f(s) ds,

where the kernel integral is evaluated as a double antiderivative.
"""

from __future__ import annotations

import logging
import math
import warnings

import numpy as np

from .basis import (
    VANISHING_RATIO,
    PhiBasis,
    SampledFunction,
    cumulative_integral,
)
from .errors import CapacityError, InputError, NumericError, VanishingFError

log = logging.getLogger(__name__)

PICARD_TOL = 1e-14
PICARD_MAX_ITER = 50
SERIES_TOL = 1e-16


class TruncationWarning(UserWarning):
    """The SPPS series was cut while its tail is still significant."""

    def __init__(self, message: str, tail_bound: float):
        super().__init__(message)
        self.tail_bound = tail_bound


def _picard(q: SampledFunction, v0: complex, v0p: complex, tol: float, max_iter: int) -> np.ndarray:
    x = q.nodes
    p = q.interp_order
    base = v0 + v0p * x
    f = base.astype(complex)
    diff = np.inf
    for _ in range(max_iter):
        once = cumulative_integral(q.values * f, q.step, p)
        new = base + cumulative_integral(once, q.step, p)
        scale = max(np.max(np.abs(new)), 1e-300)
        diff = np.max(np.abs(new - f)) / scale
        f = new
        if diff < tol:
            return f
    if diff > 1e-10:
        raise NumericError(f"Picard iteration did not converge (last relative update {diff:.2e})")
    return f


def particular_solution(q: SampledFunction, h: complex = 0.0, tol: float = PICARD_TOL,
                        max_iter: int = PICARD_MAX_ITER) -> SampledFunction:
    """Solution of ``f'' = q f`` with ``f(0) = 1``, ``f'(0) = h``.

    Raises VanishingFError when the result (nearly) vanishes somewhere on the grid.
    """
    if not np.isfinite(complex(h)):
        raise InputError("h must be finite")
    vals = _picard(q, 1.0, complex(h), tol, max_iter)
    mags = np.abs(vals)
    if mags.min() < VANISHING_RATIO * mags.max():
        idx = int(np.argmin(mags))
        raise VanishingFError(
            f"particular solution with h={h} vanishes near x={q.nodes[idx]:.6g}")
    return q.like(vals)


def nonvanishing_solution(q: SampledFunction, h: complex = 0.0) -> tuple[SampledFunction, complex]:
    """Like particular_solution, but falls back to ``y1 + i*y2`` when f vanishes.

    For real q the two real solutions y1 (1, 0) and y2 (0, 1) never vanish
    simultaneously, so the complex combination is zero-free. Returns ``(f, f'(0))``.
    """
    try:
        return particular_solution(q, h), complex(h)
    except VanishingFError:
        if not (q.is_real and complex(h).imag == 0):
            raise
    log.warning("particular solution with h=%s vanishes; using complex combination y1 + i*y2", h)
    y1 = _picard(q, 1.0, 0.0, PICARD_TOL, PICARD_MAX_ITER)
    y2 = _picard(q, 0.0, 1.0, PICARD_TOL, PICARD_MAX_ITER)
    return q.like(y1 + 1j * y2), 1j


def _default_terms(lam: complex, b: float) -> int:
    n = 0
    term = 1.0
    while term >= SERIES_TOL and n < 500:
        n += 1
        term *= abs(lam) * b * b / ((2 * n - 1) * (2 * n))
    return max(n, 1)


def spectral_taylor_coefficients(lam: complex, v0: complex, v0p: complex, h: complex,
                                 n: int) -> np.ndarray:
    """Coefficients alpha_0..alpha_n of the solution of ``v'' - q v = lam v``
    with ``v(0) = v0``, ``v'(0) = v0p`` over the basis phi_k (f(0) = 1, f'(0) = h)."""
    if n < 0:
        raise InputError("order must be >= 0")
    c1 = complex(v0)
    c2 = complex(v0p) - complex(h) * c1
    out = np.zeros(n + 1, dtype=complex)
    power = 1.0 + 0j
    for k in range(n // 2 + 1):
        if 2 * k <= n:
            out[2 * k] = c1 * power / math.factorial(2 * k)
        if 2 * k + 1 <= n:
            out[2 * k + 1] = c2 * power / math.factorial(2 * k + 1)
        power *= lam
    return out


def spps_solution(basis: PhiBasis, lam: complex, u0: complex, u0p: complex,
                  n_terms: int | None = None) -> SampledFunction:
    """Solution of ``u'' - q u = lam u`` with ``u(0) = u0``, ``u'(0) = u0p``.

    ``n_terms`` counts the powers of ``lam`` kept in each of the two series;
    the basis must reach order ``2 * n_terms + 1``.
    """
    if n_terms is None:
        n_terms = _default_terms(complex(lam), basis.b)
        n_terms = min(n_terms, (basis.n_max - 1) // 2)
    order = 2 * n_terms + 1
    if order > basis.n_max:
        raise CapacityError(f"SPPS with {n_terms} terms needs basis order {order}, have {basis.n_max}")
    coeffs = spectral_taylor_coefficients(lam, u0, u0p, basis.h, order)
    mat = basis.phi_matrix(order)
    vals = mat @ coeffs
    tail = float(np.max(np.abs(mat[:, -2:] @ coeffs[-2:])))
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    if tail > 1e-8 * scale:
        warnings.warn(TruncationWarning(
            f"SPPS tail {tail:.2e} is large relative to the solution ({scale:.2e})", tail), stacklevel=2)
    return basis.f.like(vals)
