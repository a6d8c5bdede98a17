"""Numerical transmutation operator T, its inverse, and the Bessel-type bounds.

The kernel K(x, t; h) is computed in characteristic coordinates
``H(u, v) = K(u + v, u - v; h)`` by successive approximations of

    H(u, v) = h/2 + int_0^u G(u', v) du'
    G(u, v) = q(u)/2 + int_0^v q(u + v') H(u, v') dv'

on a uniform (M + 1) x (M + 1) grid over [-b, b]^2. Only the diamond
|u| + |v| <= b (i.e. |x|, |t| <= b) is meaningful; outside it q is
extended by extrapolation/clamping so the arrays stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SampledFunction, cumulative_integral, interpolation_weights
from .errors import DomainError, InputError, NumericError

DEFAULT_KERNEL_M = 512
DEFAULT_KERNEL_TOL = 1e-12
DEFAULT_KERNEL_MAX_ITER = 60
# How far (in kernel steps) q is polynomially extrapolated beyond [-b, b].
_EXTRAP_STEPS = 8


def _bessel_series(order: int, x: np.ndarray) -> np.ndarray:
    half_sq = (x / 2.0) ** 2
    term = (x / 2.0) ** order  # 0! = 1! = 1
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term * half_sq / (k * (k + order))
        total = total + term
        if np.all(term <= 1e-17 * total) or k > 1000:
            return total


def bessel_I(order: int, x):
    """Modified Bessel function I_0 or I_1 by its power series (x >= 0)."""
    if order not in (0, 1):
        raise InputError("only orders 0 and 1 are supported")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("bessel_I requires finite x >= 0")
    out = _bessel_series(order, arr)
    return float(out) if out.ndim == 0 else out


def i1_over_z(z):
    """I_1(z)/z, analytic through z = 0 where it equals 1/2."""
    z = np.asarray(z, dtype=float)
    quarter = z * z / 4.0
    term = np.full(z.shape, 0.5)
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term * quarter / (k * (k + 1))
        total = total + term
        if np.all(term <= 1e-17 * total) or k > 1000:
            return total


def kernel_estimate(x, t, c: float, h: complex):
    """Right-hand side of the pointwise kernel bound
    |h|/2 I0(z) + (1/2) c |x + t| I1(z)/z with z = sqrt(c |x^2 - t^2|)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    z = np.sqrt(c * np.abs(x * x - t * t))
    return abs(h) / 2 * bessel_I(0, z) + 0.5 * c * np.abs(x + t) * i1_over_z(z)


def norm_bound(q: SampledFunction, h: complex, b: float | None = None) -> float:
    """Common upper bound for ||T|| and ||T^{-1}|| on C[-b, b]."""
    b = q.b if b is None else float(b)
    c = float(np.max(np.abs(q.values)))
    r = np.sqrt(c)
    return 1.0 + b * (abs(h) * bessel_I(0, b * r) + 2.0 * r * bessel_I(1, b * r))


@dataclass(frozen=True, eq=False)
class KernelGrid:
    """Kernel values H[i, j] = K(u_i + v_j, u_i - v_j; h) with u_i, v_j = -b + i*2b/M."""

    b: float
    h: complex
    M: int
    H: np.ndarray
    iters: int
    q_max: float
    interp_order: int = 5

    @property
    def step(self) -> float:
        return 2.0 * self.b / self.M

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.b, self.b, self.M + 1)

    @property
    def center(self) -> int:
        return self.M // 2

    def diamond_mask(self) -> np.ndarray:
        i = np.arange(self.M + 1) - self.center
        return (np.abs(i)[:, None] + np.abs(i)[None, :]) <= self.center

    def x_grid(self) -> np.ndarray:
        """Abscissae on which apply_T / apply_T_inverse return values."""
        return self.axis

    def xt_values(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x, t, K) at every diamond node, flattened."""
        u = self.axis
        mask = self.diamond_mask()
        uu, vv = np.meshgrid(u, u, indexing="ij")
        return (uu + vv)[mask], (uu - vv)[mask], self.H[mask]

    def kernel_value(self, x, t):
        """K(x, t; h) at arbitrary points of the square |x|, |t| <= b, by bilinear
        interpolation in (u, v)."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(x) > self.b * (1 + 1e-12)) or np.any(np.abs(t) > self.b * (1 + 1e-12)):
            raise DomainError("kernel requested outside |x|, |t| <= b")
        su = np.clip(((x + t) / 2 + self.b) / self.step, 0, self.M)
        sv = np.clip(((x - t) / 2 + self.b) / self.step, 0, self.M)
        i0 = np.clip(np.floor(su).astype(int), 0, self.M - 1)
        j0 = np.clip(np.floor(sv).astype(int), 0, self.M - 1)
        a = su - i0
        c = sv - j0
        H = self.H
        return ((1 - a) * (1 - c) * H[i0, j0] + a * (1 - c) * H[i0 + 1, j0]
                + (1 - a) * c * H[i0, j0 + 1] + a * c * H[i0 + 1, j0 + 1])


def _q_on_sums(q: SampledFunction, M: int, b: float) -> np.ndarray:
    """q at x_s = -2b + s*step for s = 0..2M (the possible values of u + v)."""
    step = 2.0 * b / M
    ks = np.arange(-M, M + 1)
    inner = np.abs(ks) <= M // 2
    out = np.empty(ks.size, dtype=complex)
    out[inner] = q(ks[inner] * step)
    # Polynomial extrapolation over a few steps at each end, then clamp.
    p = min(q.interp_order, M // 2)
    right = out[M + M // 2 - p: M + M // 2 + 1]
    left = out[M - M // 2: M - M // 2 + p + 1]
    ext = np.arange(1, _EXTRAP_STEPS + 1, dtype=float)
    idx, w = interpolation_weights(p + ext, p, p)
    r_ext = np.sum(right[idx] * w, axis=-1)
    idx, w = interpolation_weights(-ext, p, p)
    l_ext = np.sum(left[idx] * w, axis=-1)
    for j, s in enumerate(range(M + M // 2 + 1, M + M // 2 + 1 + _EXTRAP_STEPS)):
        if s < ks.size:
            out[s] = r_ext[j]
    for j, s in enumerate(range(M - M // 2 - 1, M - M // 2 - 1 - _EXTRAP_STEPS, -1)):
        if s >= 0:
            out[s] = l_ext[j]
    hi = min(M + M // 2 + _EXTRAP_STEPS, ks.size - 1)
    lo = max(M - M // 2 - _EXTRAP_STEPS, 0)
    out[hi + 1:] = out[hi]
    out[:lo] = out[lo]
    return out


def build_kernel(q: SampledFunction, h: complex, M: int = DEFAULT_KERNEL_M,
                 tol: float = DEFAULT_KERNEL_TOL, max_iter: int = DEFAULT_KERNEL_MAX_ITER
                 ) -> KernelGrid:
    """Transmutation kernel on the characteristic grid by successive approximations."""
    if M < 4 or M % 2:
        raise InputError(f"kernel resolution M must be an even integer >= 4, got {M}")
    b = q.b
    step = 2.0 * b / M
    p = q.interp_order
    h = complex(h)
    i = np.arange(M + 1)
    q_sum = _q_on_sums(q, M, b)[i[:, None] + i[None, :]]
    q_u = q_sum[i, M // 2]  # u + 0
    mask = (np.abs(i - M // 2)[:, None] + np.abs(i - M // 2)[None, :]) <= M // 2
    H = np.full((M + 1, M + 1), h / 2, dtype=complex)
    for it in range(1, max_iter + 1):
        G = q_u[:, None] / 2 + cumulative_integral(q_sum * H, step, p, axis=1)
        new = h / 2 + cumulative_integral(G, step, p, axis=0)
        scale = max(1.0, float(np.max(np.abs(new[mask]))))
        diff = float(np.max(np.abs(new - H)[mask])) / scale
        H = new
        if diff < tol:
            break
    else:
        raise NumericError(f"kernel iteration did not converge in {max_iter} steps (diff {diff:.2e})")
    H.setflags(write=False)
    return KernelGrid(b=b, h=h, M=M, H=H, iters=it, q_max=float(np.max(np.abs(q.values))),
                      interp_order=p)


def _line_integral(kernel: KernelGrid, u: SampledFunction, inverse: bool) -> np.ndarray:
    M, c, step = kernel.M, kernel.center, kernel.step
    p = kernel.interp_order
    out = np.zeros(M + 1, dtype=complex)
    for k in range(-c, c + 1):
        if k == 0:
            continue
        lo, hi = sorted((c, c + k))
        # Pad the path with nodes beyond its ends (still inside |t| <= b) so
        # short paths keep full-order stencils.
        ii = np.arange(lo - p, hi + p + 1)
        if inverse:
            jj = ii - k        # u - v = x, t = u + v
        else:
            jj = 2 * c + k - ii  # u + v = x, t = u - v
        t_idx = ii + jj - 2 * c if inverse else ii - jj
        keep = (np.abs(t_idx) <= c) & (ii >= 0) & (ii <= M) & (jj >= 0) & (jj <= M)
        ii, jj, t_idx = ii[keep], jj[keep], t_idx[keep]
        vals = kernel.H[ii, jj] * u(t_idx * step)
        start = int(np.searchsorted(ii, lo))
        stop = int(np.searchsorted(ii, hi))
        running = cumulative_integral(vals, 2 * step, p, origin=start)
        out[k + c] = np.sign(k) * running[stop]
    return out


def _check_domain(kernel: KernelGrid, u: SampledFunction) -> None:
    if abs(u.b - kernel.b) > 1e-12 * kernel.b:
        raise DomainError(f"function lives on [-{u.b}, {u.b}], kernel on [-{kernel.b}, {kernel.b}]")


def apply_T(kernel: KernelGrid, u: SampledFunction) -> SampledFunction:
    """(T u)(x) = u(x) + int_{-x}^{x} K(x, t; h) u(t) dt on the kernel's x-grid.

    For x on that grid the integration path is a grid anti-diagonal, so the
    kernel is read at nodes without interpolation.
    """
    _check_domain(kernel, u)
    x = kernel.x_grid()
    vals = u(x) + _line_integral(kernel, u, inverse=False)
    return SampledFunction(kernel.b, vals, kernel.interp_order)


def apply_T_inverse(kernel: KernelGrid, g: SampledFunction) -> SampledFunction:
    """(T^{-1} g)(x) = g(x) - int_{-x}^{x} K(t, x; h) g(t) dt on the kernel's x-grid."""
    _check_domain(kernel, g)
    x = kernel.x_grid()
    vals = g(x) - _line_integral(kernel, g, inverse=True)
    return SampledFunction(kernel.b, vals, kernel.interp_order)


def constant_potential_kernel(x, t, c: float, h: complex):
    """Closed-form kernel for q = c > 0 on 0 <= t <= x."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    z = np.sqrt(c * np.clip(x * x - t * t, 0.0, None))
    return h / 2 * bessel_I(0, z) + 0.5 * c * (x + t) * i1_over_z(z)
