"""Grid functions, quadrature and the recursive-integral basis phi_k / psi_k.

Every function lives on a uniform grid over ``[-b, b]`` with an even number of
subintervals, so that ``x = 0`` (the expansion center) is always a node.
Between nodes a function is represented by local Lagrange interpolation of
degree ``interp_order``; integration is exact for that interpolant.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import CapacityError, DomainError, InputError, VanishingFError

DEFAULT_GRID_N = 3000
DEFAULT_INTERP_ORDER = 5
DEFAULT_BASIS_CAP = 200
DEFAULT_DERIVATIVE_CAP = 4
# Points of the finite-difference stencil used by numeric_derivative.
FD_STENCIL = 7
VANISHING_RATIO = 1e-8


def default_grid_n() -> int:
    """Grid size, honouring the ``KLEINWAVE_GRID_N`` environment override."""
    raw = os.environ.get("KLEINWAVE_GRID_N")
    if not raw:
        return DEFAULT_GRID_N
    try:
        n = int(raw)
    except ValueError as exc:
        raise InputError(f"KLEINWAVE_GRID_N must be an integer, got {raw!r}") from exc
    if n < 8 or n % 2:
        raise InputError(f"KLEINWAVE_GRID_N must be an even integer >= 8, got {n}")
    return n


@lru_cache(maxsize=None)
def _cell_weights(p: int) -> np.ndarray:
    """W[o, j]: integral over [o, o+1] of the j-th Lagrange basis polynomial on nodes 0..p.

    Computed in exact rational arithmetic; float monomial forms lose ~1e-13 here.
    """
    weights = np.empty((p, p + 1))
    for j in range(p + 1):
        # Monomial coefficients of prod_{m != j} (x - m) / (j - m), exactly.
        poly = [Fraction(1)]
        for m in range(p + 1):
            if m == j:
                continue
            shifted = [Fraction(0)] + poly
            for i, c in enumerate(poly):
                shifted[i] -= m * c
            poly = [c / (j - m) for c in shifted]
        prim = [Fraction(0)] + [c / (i + 1) for i, c in enumerate(poly)]
        for o in range(p):
            val = sum(c * ((o + 1) ** i - o ** i) for i, c in enumerate(prim))
            weights[o, j] = float(val)
    return weights


def _lagrange_weights(tau: np.ndarray, p: int) -> np.ndarray:
    """Lagrange basis on nodes 0..p evaluated at tau by the product formula."""
    diffs = tau[..., None] - np.arange(p + 1)
    w = np.empty(diffs.shape)
    for j in range(p + 1):
        num = np.ones(tau.shape)
        den = 1.0
        for m in range(p + 1):
            if m != j:
                num = num * diffs[..., m]
                den *= j - m
        w[..., j] = num / den
    return w


@lru_cache(maxsize=None)
def _fd_weights(offsets: tuple[int, ...], deriv: int) -> np.ndarray:
    """Finite-difference weights for the given integer offsets (unit spacing)."""
    k = len(offsets)
    vander = np.vander(np.asarray(offsets, dtype=float), k, increasing=True).T
    rhs = np.zeros(k)
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(vander, rhs)


def _stencil_start(cell: np.ndarray, n_int: int, p: int) -> np.ndarray:
    return np.clip(cell - (p - 1) // 2, 0, n_int - p)


def cumulative_integral(values: np.ndarray, step: float, p: int = DEFAULT_INTERP_ORDER,
                        axis: int = -1, origin: int | None = None) -> np.ndarray:
    """Running integral of uniformly sampled data along ``axis``.

    Each cell integral is the exact integral of the degree-``p`` Lagrange
    interpolant through the ``p + 1`` nodes around the cell (shifted inward
    near the ends). The result vanishes at index ``origin`` (default: the
    middle node).
    """
    vals = np.moveaxis(np.asarray(values), axis, -1)
    n_int = vals.shape[-1] - 1
    p = min(p, n_int)
    if origin is None:
        origin = n_int // 2
    cells = np.arange(n_int)
    start = _stencil_start(cells, n_int, p)
    weights = _cell_weights(p)[cells - start]  # (n_int, p+1)
    idx = start[:, None] + np.arange(p + 1)[None, :]
    cell_int = step * np.einsum("...cj,cj->...c", vals[..., idx], weights)
    # Accumulate outward from the origin so far-away cells never touch values near it.
    out = np.zeros(vals.shape, dtype=np.result_type(vals, float))
    out[..., origin + 1:] = np.cumsum(cell_int[..., origin:], axis=-1)
    if origin > 0:
        out[..., :origin] = -np.cumsum(cell_int[..., :origin][..., ::-1], axis=-1)[..., ::-1]
    return np.moveaxis(out, -1, axis)


def interpolation_weights(s: np.ndarray, n_int: int, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Stencil indices and Lagrange weights for fractional grid positions ``s``.

    Positions within 1e-11 of a node snap onto it, so node evaluation returns
    stored samples exactly.
    """
    s = np.asarray(s, dtype=float)
    p = min(p, n_int)
    nearest = np.rint(s)
    on_node = np.abs(s - nearest) < 1e-11
    s = np.where(on_node, nearest, s)
    cell = np.clip(np.floor(s).astype(int), 0, n_int - 1)
    start = _stencil_start(cell, n_int, p)
    tau = s - start
    w = _lagrange_weights(tau, p)
    node_pos = (nearest - start).astype(int)
    snap = np.zeros_like(w)
    inside = on_node & (node_pos >= 0) & (node_pos <= p)
    if np.any(inside):
        snap[inside, node_pos[inside]] = 1.0
        w = np.where(inside[..., None], snap, w)
    idx = start[..., None] + np.arange(p + 1)
    return idx, w


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """A complex function sampled on the uniform grid ``linspace(-b, b, N + 1)``."""

    b: float
    values: np.ndarray
    interp_order: int = DEFAULT_INTERP_ORDER

    def __post_init__(self) -> None:
        if not (np.isfinite(self.b) and self.b > 0):
            raise InputError(f"half-width b must be a positive finite number, got {self.b}")
        if int(self.interp_order) != self.interp_order or self.interp_order < 1:
            raise InputError(f"interp_order must be an integer >= 1, got {self.interp_order}")
        vals = np.array(self.values, dtype=complex)
        if vals.ndim != 1:
            raise InputError("values must be one-dimensional")
        n_int = vals.size - 1
        if n_int < 2 or n_int % 2:
            raise InputError(f"need an even number (>= 2) of subintervals, got {n_int}")
        if not np.all(np.isfinite(vals)):
            raise InputError("sampled values contain NaN or Inf")
        vals.setflags(write=False)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "interp_order", int(self.interp_order))

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], b: float,
                      n: int | None = None, interp_order: int = DEFAULT_INTERP_ORDER
                      ) -> "SampledFunction":
        n = default_grid_n() if n is None else n
        x = np.linspace(-b, b, n + 1)
        vals = np.broadcast_to(np.asarray(func(x), dtype=complex), x.shape)
        return cls(b, vals, interp_order)

    @classmethod
    def constant(cls, c: complex, b: float, n: int | None = None,
                 interp_order: int = DEFAULT_INTERP_ORDER) -> "SampledFunction":
        return cls.from_callable(lambda x: np.full(x.shape, c, dtype=complex), b, n, interp_order)

    @property
    def N(self) -> int:
        return self.values.size - 1

    @property
    def step(self) -> float:
        return 2.0 * self.b / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.b, self.b, self.N + 1)

    @property
    def center_index(self) -> int:
        return self.N // 2

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.values.imag == 0))

    def like(self, values: np.ndarray) -> "SampledFunction":
        """New function on the same grid with the same interpolation order."""
        return SampledFunction(self.b, values, self.interp_order)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def grid_positions(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        tol = 1e-12 * self.b
        if np.any(x < -self.b - tol) or np.any(x > self.b + tol) or not np.all(np.isfinite(x)):
            raise DomainError(f"abscissa outside [-{self.b}, {self.b}]")
        return np.clip((x + self.b) / self.step, 0.0, float(self.N))

    def __call__(self, x):
        s = self.grid_positions(x)
        idx, w = interpolation_weights(s, self.N, self.interp_order)
        out = np.sum(self.values[idx] * w, axis=-1)
        return out[()] if np.ndim(out) == 0 else out


def check_same_grid(*funcs: SampledFunction) -> None:
    first = funcs[0]
    for g in funcs[1:]:
        if g.N != first.N or not math.isclose(g.b, first.b, rel_tol=1e-14):
            raise InputError("sampled functions live on different grids")


def antiderivative(g: SampledFunction) -> SampledFunction:
    """Antiderivative ``G`` with ``G(0) = 0``, exact for piecewise polynomials of
    degree ``<= g.interp_order`` on the grid."""
    vals = cumulative_integral(g.values, g.step, g.interp_order, origin=g.center_index)
    return g.like(vals)


def numeric_derivative(values: np.ndarray, step: float, width: int = FD_STENCIL) -> np.ndarray:
    """First derivative of uniformly sampled data by centered finite differences,
    switching to one-sided stencils of the same width near the ends."""
    values = np.asarray(values)
    n = values.size
    width = min(width, n)
    half = width // 2
    out = np.empty(n, dtype=np.result_type(values, float))
    center = _fd_weights(tuple(range(-half, width - half)), 1)
    lo, hi = half, n - (width - half) + 1
    acc = np.zeros(hi - lo, dtype=out.dtype)
    for j, c in enumerate(center):
        acc += c * values[lo - half + j: hi - half + j]
    out[lo:hi] = acc
    for i in list(range(0, lo)) + list(range(hi, n)):
        start = min(max(i - half, 0), n - width)
        offs = tuple(range(start - i, start - i + width))
        out[i] = _fd_weights(offs, 1) @ values[start:start + width]
    return out / step


@dataclass(frozen=True, eq=False)
class PhiBasis:
    """The families phi_k and psi_k (k = 0..n_max) built from a particular solution f.

    ``X[k]`` and ``Xt[k]`` hold the raw recursive integrals ``X^(k)`` and
    ``X~^(k)``; the expansion center is fixed at ``x0 = 0``.
    """

    f: SampledFunction
    h: complex
    n_max: int
    phi: tuple[SampledFunction, ...]
    psi: tuple[SampledFunction, ...]
    X: tuple[SampledFunction, ...]
    Xt: tuple[SampledFunction, ...]
    x0: float = 0.0
    _matrix: np.ndarray = field(default=None, repr=False)

    @property
    def b(self) -> float:
        return self.f.b

    @property
    def grid(self) -> np.ndarray:
        return self.f.nodes

    @property
    def is_real(self) -> bool:
        return self.f.is_real and complex(self.h).imag == 0

    def phi_matrix(self, n: int | None = None) -> np.ndarray:
        """Grid values of phi_0..phi_n as a ``(N + 1, n + 1)`` array."""
        n = self.n_max if n is None else n
        self._require(n)
        if self._matrix is None:
            mat = np.column_stack([p.values for p in self.phi])
            mat.setflags(write=False)
            object.__setattr__(self, "_matrix", mat)
        return self._matrix[:, : n + 1]

    def phi_at(self, x, n: int | None = None) -> np.ndarray:
        """Interpolated values of phi_0..phi_n at arbitrary points, shape ``x.shape + (n + 1,)``."""
        n = self.n_max if n is None else n
        mat = self.phi_matrix(n)
        s = self.f.grid_positions(x)
        idx, w = interpolation_weights(s, self.f.N, self.f.interp_order)
        return np.einsum("...j,...jk->...k", w, mat[idx])

    def _require(self, n: int) -> None:
        if n > self.n_max:
            raise CapacityError(f"basis built to order {self.n_max}, order {n} requested")


def build_basis(f: SampledFunction, n: int, h: complex | None = None,
                cap: int = DEFAULT_BASIS_CAP) -> PhiBasis:
    """Construct phi_0..phi_n and psi_0..psi_n by the alternating recursive integrals.

    ``f`` is rescaled so that ``f(0) = 1``. When ``h`` (the value ``f'(0)`` of
    the normalized f) is not supplied it is estimated by finite differences.
    """
    if n < 0:
        raise InputError(f"basis order must be >= 0, got {n}")
    if n > cap:
        raise CapacityError(f"basis order {n} exceeds the configured cap {cap}")
    mags = np.abs(f.values)
    if mags.min() < VANISHING_RATIO * mags.max():
        raise VanishingFError(
            f"f nearly vanishes on the grid (min |f| = {mags.min():.3e}, max |f| = {mags.max():.3e})")
    f0 = f.values[f.center_index]
    f = f.like(f.values / f0)
    if h is None:
        h = complex(numeric_derivative(f.values, f.step)[f.center_index])
    else:
        h = complex(h)

    f2 = f.values ** 2
    inv_f2 = 1.0 / f2
    one = f.like(np.ones_like(f.values))
    X: list[SampledFunction] = [one]
    Xt: list[SampledFunction] = [one]
    for k in range(1, n + 1):
        w_tilde, w_plain = (f2, inv_f2) if k % 2 else (inv_f2, f2)
        Xt.append(f.like(k * cumulative_integral(Xt[-1].values * w_tilde, f.step, f.interp_order)))
        X.append(f.like(k * cumulative_integral(X[-1].values * w_plain, f.step, f.interp_order)))

    phi, psi = [], []
    for k in range(n + 1):
        if k % 2:
            phi.append(f.like(f.values * X[k].values))
            psi.append(f.like(Xt[k].values / f.values))
        else:
            phi.append(f.like(f.values * Xt[k].values))
            psi.append(f.like(X[k].values / f.values))
    return PhiBasis(f=f, h=h, n_max=n, phi=tuple(phi), psi=tuple(psi), X=tuple(X), Xt=tuple(Xt))


def f_derivative(g: SampledFunction, basis: PhiBasis, k: int,
                 cap: int = DEFAULT_DERIVATIVE_CAP) -> SampledFunction:
    """Generalized derivative d_k^f[g] by repeated finite differencing.

    Odd steps apply ``f d/dx (. / f)``, even steps ``(1/f) d/dx (f .)``.
    Numerical differentiation loses accuracy quickly, hence the cap.
    """
    if k < 0:
        raise InputError("derivative order must be >= 0")
    if k > cap:
        raise CapacityError(f"f-derivative order {k} exceeds the cap {cap}")
    check_same_grid(g, basis.f)
    fv = basis.f.values
    cur = g.values
    for step in range(1, k + 1):
        if step % 2:
            cur = fv * numeric_derivative(cur / fv, g.step)
        else:
            cur = numeric_derivative(fv * cur, g.step) / fv
    return g.like(cur)


@dataclass(frozen=True, eq=False)
class FPolynomial:
    """Finite combination ``sum_k coeffs[k] * phi_k``."""

    basis: PhiBasis
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        if not np.all(np.isfinite(c)):
            raise InputError("f-polynomial coefficients must be finite")
        self.basis._require(c.size - 1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def grid_values(self) -> np.ndarray:
        return self.basis.phi_matrix(self.degree) @ self.coeffs

    def as_sampled(self) -> SampledFunction:
        return self.basis.f.like(self.grid_values())

    def __call__(self, x):
        out = self.basis.phi_at(x, self.degree) @ self.coeffs
        return out[()] if np.ndim(out) == 0 else out


def fpoly_eval(p: FPolynomial, x):
    """Value of the f-polynomial ``p`` at ``x`` (scalar or array) in ``[-b, b]``."""
    return p(x)


def fpolynomial(basis: PhiBasis, coeffs: Sequence[complex]) -> FPolynomial:
    return FPolynomial(basis, np.asarray(coeffs, dtype=complex))
