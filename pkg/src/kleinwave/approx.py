"""Best uniform approximation of data by f-polynomials.

Real data on a real basis go through the Remez exchange (single or general).
Complex data, or a complex basis, go through a discretized minimax linear
program solved by :mod:`kleinwave.simplex`. Least squares is provided as an
initialization aid and a baseline.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import FPolynomial, PhiBasis, SampledFunction, check_same_grid
from .errors import CapacityError, HaarViolationError, InputError, NumericError
from .simplex import solve_standard_form

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50
DEFAULT_LP_GRID = 1001
DEFAULT_ANGLES = 16
# Successive parabolic steps used to polish a grid extremum.
_REFINE_STEPS = 6
_LP_PASSES = 2
_ROUNDING = 1e-15


class HaarWarning(UserWarning):
    """The discrete least-squares system is rank deficient."""


class RemezStagnationError(NumericError):
    """|E| stopped increasing before the stopping rule was met."""

    module = "approx"

    def __init__(self, message: str, result: "ApproxResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class ReferenceSet:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).ravel()
        if pts.size < 2 or not np.all(np.isfinite(pts)):
            raise InputError("a reference set needs at least two finite points")
        if np.any(np.diff(pts) <= 0):
            raise InputError("reference points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def degree(self) -> int:
        return self.points.size - 2

    def __len__(self) -> int:
        return self.points.size


@dataclass
class ApproxResult:
    poly: FPolynomial
    E: float
    D: float
    iterations: int
    history: list[tuple[float, float]] = field(default_factory=list)
    reference: ReferenceSet | None = None
    converged: bool = True
    method: str = "remez"


def _check_degree(basis: PhiBasis, n: int) -> None:
    if n < 0:
        raise InputError(f"degree must be >= 0, got {n}")
    if n > basis.n_max:
        raise CapacityError(f"degree {n} exceeds the basis order {basis.n_max}")


def _require_real(g: SampledFunction, basis: PhiBasis) -> None:
    if not basis.is_real or not g.is_real:
        raise InputError("Remez needs a real basis and real data; use minimax_lp for complex problems")


def tchebyshev_interpolation(g_values, refset: ReferenceSet, basis: PhiBasis, n: int
                             ) -> tuple[np.ndarray, float]:
    """Solve sum_k c_k phi_k(x_j) + (-1)^j E = g(x_j) on the n + 2 reference points."""
    _check_degree(basis, n)
    g_values = np.asarray(g_values)
    if np.iscomplexobj(g_values):
        if np.any(g_values.imag != 0):
            raise InputError("Tchebyshev interpolation needs real data")
        g_values = g_values.real
    g_values = g_values.astype(float)
    if len(refset) != n + 2 or g_values.size != n + 2:
        raise InputError(f"degree {n} needs {n + 2} reference points and values")
    phis = basis.phi_at(refset.points, n)
    if np.any(np.abs(phis.imag) > 1e-14 * np.max(np.abs(phis))):
        raise InputError("Tchebyshev interpolation needs a real basis")
    A = np.empty((n + 2, n + 2))
    A[:, : n + 1] = phis.real
    A[:, n + 1] = (-1.0) ** np.arange(n + 2)
    scale = np.max(np.abs(A), axis=0)
    if np.any(scale == 0):
        raise HaarViolationError("basis function vanishes on the whole reference set")
    As = A / scale
    try:
        sol = np.linalg.solve(As, g_values)
    except np.linalg.LinAlgError as exc:
        raise HaarViolationError("interpolation system is singular on the reference set") from exc
    resid = np.max(np.abs(As @ sol - g_values))
    if not np.all(np.isfinite(sol)) or resid > 1e-10 * max(np.max(np.abs(g_values)), 1e-300):
        raise HaarViolationError(f"interpolation system is numerically singular (residual {resid:.2e})")
    sol = sol / scale
    return sol[: n + 1], float(sol[n + 1])


def _alternating_extrema(r: np.ndarray, floor: float) -> list[int]:
    """Index of the largest |r| in every maximal run of constant sign."""
    sign = np.sign(r)
    out: list[int] = []
    i, N = 0, r.size
    while i < N:
        if abs(r[i]) <= floor:
            i += 1
            continue
        j = i
        while j + 1 < N and (sign[j + 1] == sign[i] or abs(r[j + 1]) <= floor):
            j += 1
        seg = np.abs(r[i: j + 1])
        out.append(i + int(np.argmax(seg)))
        i = j + 1
    return out


def _thin_alternant(idx: list[int], r: np.ndarray, size: int) -> list[int]:
    idx = list(idx)
    while len(idx) > size:
        mags = np.abs(r[idx])
        if len(idx) - size == 1:
            idx.pop(0 if mags[0] <= mags[-1] else -1)
            continue
        i = int(np.argmin(mags))
        if i == 0 or i == len(idx) - 1:
            idx.pop(i)
        else:
            nb = i - 1 if mags[i - 1] <= mags[i + 1] else i + 1
            for j in sorted((i, nb), reverse=True):
                idx.pop(j)
    return idx


def initial_reference(kind: str, basis: PhiBasis, n: int, g: SampledFunction | None = None
                      ) -> ReferenceSet:
    """Starting reference set: Chebyshev extremal points, or the strongest
    alternating extrema of the least-squares residual."""
    if n < 0:
        raise InputError(f"degree must be >= 0, got {n}")
    if kind == "chebyshev":
        k = np.arange(n + 2)
        return ReferenceSet(-basis.b * np.cos(k * np.pi / (n + 1)))
    if kind != "lsq_extrema":
        raise InputError(f"unknown initial reference kind {kind!r}")
    if g is None:
        raise InputError("lsq_extrema needs the data function")
    fit = lsq_approx(g, basis, n)
    r = (g.values - fit.grid_values()).real
    floor = 1e-12 * max(float(np.max(np.abs(g.values))), 1e-300)
    idx = _alternating_extrema(r, floor)
    if len(idx) < n + 2:
        warnings.warn(f"least-squares residual has only {len(idx)} alternating extrema; "
                      "using Chebyshev points", RuntimeWarning, stacklevel=2)
        return initial_reference("chebyshev", basis, n)
    idx = _thin_alternant(idx, r, n + 2)
    return ReferenceSet(basis.grid[idx])


class _Residual:
    """g - sum c_k phi_k on the grid and at arbitrary points."""

    def __init__(self, g: SampledFunction, basis: PhiBasis, n: int):
        self.g = g
        self.basis = basis
        self.n = n
        self.mat = basis.phi_matrix(n).real
        self.gv = g.values.real

    def set(self, coeffs: np.ndarray) -> np.ndarray:
        self.c = coeffs
        self.grid = self.gv - self.mat @ coeffs
        return self.grid

    def at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.g(x).real - self.basis.phi_at(x, self.n).real @ self.c

    def refine(self, idx: np.ndarray, lo: np.ndarray | None = None, hi: np.ndarray | None = None
               ) -> tuple[np.ndarray, np.ndarray]:
        """Polish grid extrema of |r| by successive parabolic steps; returns (x, r(x))."""
        nodes = self.basis.grid
        step = nodes[1] - nodes[0]
        b = self.basis.b
        lo = np.full(idx.shape, -b) if lo is None else lo
        hi = np.full(idx.shape, b) if hi is None else hi
        x = nodes[idx].copy()
        val = self.grid[idx].copy()
        delta = step
        for _ in range(_REFINE_STEPS):
            xm = np.clip(x - delta, lo, hi)
            xp = np.clip(x + delta, lo, hi)
            rm, rp = self.at(xm), self.at(xp)
            denom = rm - 2 * val + rp
            ok = (xm < x) & (xp > x) & (denom != 0)
            shift = np.where(ok, 0.5 * (rm - rp) / np.where(denom == 0, 1, denom), 0.0)
            shift = np.clip(shift, -1.0, 1.0) * delta
            cand = np.clip(x + shift, lo, hi)
            rc = self.at(cand)
            better = np.abs(rc) > np.abs(val)
            x = np.where(better, cand, x)
            val = np.where(better, rc, val)
            delta /= 4.0
        return x, val


def _single_exchange(ref: np.ndarray, signs: np.ndarray, xi: float, sigma: float) -> np.ndarray:
    pts = ref.copy()
    if xi < pts[0]:
        if signs[0] == sigma:
            pts[0] = xi
        else:
            pts = np.concatenate([[xi], pts[:-1]])
    elif xi > pts[-1]:
        if signs[-1] == sigma:
            pts[-1] = xi
        else:
            pts = np.concatenate([pts[1:], [xi]])
    else:
        j = int(np.searchsorted(pts, xi, side="right")) - 1
        j = min(j, pts.size - 2)
        pts[j if signs[j] == sigma else j + 1] = xi
    return pts


def _general_exchange(res: _Residual, ref: np.ndarray, signs: np.ndarray) -> np.ndarray:
    nodes = res.basis.grid
    r = res.grid
    m = ref.size
    pos = np.searchsorted(nodes, ref)
    # bounds[j]..bounds[j+1]-1 are the grid nodes of the j-th interval between zeros
    bounds = np.empty(m + 1, dtype=int)
    bounds[0], bounds[m] = 0, nodes.size
    for j in range(m - 1):
        a, c = pos[j], max(pos[j + 1], pos[j] + 1)
        seg = signs[j] * r[a:c]
        flip = np.flatnonzero(seg < 0)
        bounds[j + 1] = a + int(flip[0]) if flip.size else (a + c) // 2
    bounds[1:m] = np.maximum.accumulate(bounds[1:m])
    new = ref.copy()
    for j in range(m):
        a, c = bounds[j], bounds[j + 1]
        if c <= a:
            continue
        k = a + int(np.argmax(signs[j] * r[a:c]))
        lo = np.array([nodes[max(a - 1, 0)]])
        hi = np.array([nodes[min(c, nodes.size - 1)]])
        x, v = res.refine(np.array([k]), lo, hi)
        if signs[j] * v[0] > signs[j] * res.at(ref[j]):
            new[j] = x[0]
    order = np.argsort(new)
    new = new[order]
    if np.any(np.diff(new) <= 0):
        return ref
    return new


def remez(g: SampledFunction, basis: PhiBasis, n: int, exchange: str = "general",
          tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
          initial: str | ReferenceSet = "chebyshev", on_stagnation: str = "raise") -> ApproxResult:
    """Remez exchange for the best uniform approximation of real g on [-b, b].

    Stops when (D - |E|)/D < tol, when D - |E| is at the rounding level of g,
    or after max_iter iterations. If |E| drops
    (the precision floor of the basis was reached) a RemezStagnationError is
    raised, or with ``on_stagnation="return"`` the iterate with the smallest
    D is returned with ``converged=False``.
    """
    _check_degree(basis, n)
    check_same_grid(g, basis.f)
    _require_real(g, basis)
    if exchange not in ("single", "general"):
        raise InputError(f"unknown exchange {exchange!r}")
    if on_stagnation not in ("raise", "return"):
        raise InputError(f"on_stagnation must be 'raise' or 'return', got {on_stagnation!r}")
    ref = initial if isinstance(initial, ReferenceSet) else initial_reference(initial, basis, n, g)
    if len(ref) != n + 2:
        raise InputError(f"initial reference has {len(ref)} points, degree {n} needs {n + 2}")
    res = _Residual(g, basis, n)
    gscale = max(float(np.max(np.abs(res.gv))), 1e-300)
    history: list[tuple[float, float]] = []
    best = None
    pts = ref.points.copy()
    last_E = 0.0
    for it in range(1, max_iter + 1):
        coeffs, E = tchebyshev_interpolation(g(pts).real, ReferenceSet(pts), basis, n)
        r = res.set(coeffs)
        i = int(np.argmax(np.abs(r)))
        xi, ri = res.refine(np.array([i]))
        xi, ri = float(xi[0]), float(ri[0])
        D = abs(ri)
        history.append((abs(E), D))
        result = ApproxResult(FPolynomial(basis, coeffs.astype(complex)), E, D, it, list(history),
                              ReferenceSet(pts), False, "remez")
        if best is None or D < best.D:
            best = result
        # D - |E| at the rounding level of g cannot be resolved further.
        if D <= 1e-14 * gscale or D - abs(E) <= _ROUNDING * gscale or (D - abs(E)) / D < tol:
            result.converged = True
            return result
        if abs(E) < last_E * (1 - 1e-12):
            best.converged = False
            best.history = list(history)
            msg = (f"Remez stagnated at iteration {it}: |E| fell from {last_E:.6e} to {abs(E):.6e} "
                   f"(best D {best.D:.3e}); the basis precision floor is likely reached")
            if on_stagnation == "raise":
                raise RemezStagnationError(msg, best)
            log.info(msg)
            return best
        last_E = abs(E)
        signs = np.sign(E) * (-1.0) ** np.arange(n + 2)
        if exchange == "single":
            new = _single_exchange(pts, signs, xi, np.sign(ri))
        else:
            new = _general_exchange(res, pts, signs)
            if not np.any(np.abs(new - xi) <= 1e-12 * basis.b):
                new = _single_exchange(new, signs, xi, np.sign(ri))
        if np.any(np.diff(new) <= 0) or np.array_equal(new, pts):
            best.history = list(history)
            best.converged = False
            return best
        pts = new
    best.history = list(history)
    return best


def _lp_grid(N: int, grid_N: int) -> np.ndarray:
    return np.unique(np.round(np.linspace(0, N, min(grid_N, N + 1))).astype(int))


def _lp_dual_solve(phs: np.ndarray, gs: np.ndarray, rot: np.ndarray, real: bool
                   ) -> tuple[np.ndarray, int]:
    """Primal values (E, c) of min E s.t. Re(w (g - phi c)) <= E for all rotations w."""
    blocks = []
    rhs = []
    ones = np.ones((gs.size, 1))
    for w in rot:
        rp = w * phs
        blocks.append(np.hstack([ones, rp.real] if real else [ones, rp.real, -rp.imag]))
        rhs.append((w * gs).real)
    Ap = np.vstack(blocks)
    r = np.concatenate(rhs)
    e1 = np.zeros(Ap.shape[1])
    e1[0] = 1.0
    lp = solve_standard_form(-r, Ap.T, e1)
    return -lp.duals, lp.iterations


def minimax_lp(g: SampledFunction, basis: PhiBasis, n: int, grid_N: int = DEFAULT_LP_GRID,
               angles_m: int = DEFAULT_ANGLES) -> ApproxResult:
    """Discretized minimax as a linear program (real or complex case).

    The LP minimizes E subject to Re(e^{i theta} (g - sum c_k phi_k)) <= E at
    every discretization point and angle; the real case uses theta in {0, pi}.
    The dual (few rows, many columns) is solved; the primal values are its
    simplex multipliers.
    """
    _check_degree(basis, n)
    check_same_grid(g, basis.f)
    if grid_N < n + 2:
        raise InputError(f"grid_N must be >= n + 2 = {n + 2}")
    if angles_m < 3:
        raise InputError("angles_m must be >= 3")
    idx = _lp_grid(g.N, grid_N)
    full = basis.phi_matrix(n)
    phi = full[idx]
    real = basis.is_real and g.is_real
    colscale = np.max(np.abs(phi), axis=0)
    colscale[colscale == 0] = 1.0
    # LP unknowns are coordinates over an orthogonalized basis, which keeps the
    # dual's equality rows well conditioned at high degree.
    Q, R = np.linalg.qr(phi / colscale)
    if real:
        Q, R = Q.real, R.real
    qscale = np.max(np.abs(Q), axis=0)
    qscale[qscale == 0] = 1.0
    phs = Q / qscale
    if real:
        rot = np.array([1.0, -1.0])
    else:
        rot = np.exp(2j * np.pi * np.arange(angles_m) / angles_m)
    # The LP is solved for the correction to a least-squares start (and once
    # more for the correction to that), so its data are O(1) after scaling.
    coeffs = lsq_approx(g, basis, n).coeffs
    if real:
        coeffs = coeffs.real
    iterations = 0
    E = 0.0
    for _ in range(_LP_PASSES):
        resid = g.values[idx] - phi @ coeffs
        gscale = float(np.max(np.abs(resid)))
        if gscale <= 1e-300:
            break
        y, its = _lp_dual_solve(phs, resid / gscale, rot, real)
        iterations += its
        d = (y[1: n + 2] if real else y[1: n + 2] + 1j * y[n + 2:]) / qscale * gscale
        step = np.linalg.solve(R, d) / colscale
        coeffs = coeffs + step
        E = float(y[0]) * gscale
    poly = FPolynomial(basis, np.asarray(coeffs, dtype=complex))
    D = float(np.max(np.abs(g.values - full @ coeffs)))
    return ApproxResult(poly, E, D, iterations, [(abs(E), D)], None, True, "lp")


def lsq_approx(g: SampledFunction, basis: PhiBasis, n: int) -> FPolynomial:
    """Discrete least squares over the grid (SVD-based solve, scaled columns)."""
    _check_degree(basis, n)
    check_same_grid(g, basis.f)
    mat = basis.phi_matrix(n)
    scale = np.max(np.abs(mat), axis=0)
    scale[scale == 0] = 1.0
    sol, _, rank, _ = np.linalg.lstsq(mat / scale, g.values, rcond=None)
    if rank < n + 1:
        warnings.warn(f"least-squares system has rank {rank} < {n + 1}", HaarWarning, stacklevel=2)
    return FPolynomial(basis, sol / scale)


def approximate(g: SampledFunction, basis: PhiBasis, n: int, method: str = "remez", **kw
                ) -> ApproxResult:
    """Dispatch to remez (real data) or minimax_lp; remez falls back to its best iterate at the floor."""
    if method == "remez":
        kw.setdefault("on_stagnation", "return")
        return remez(g, basis, n, **kw)
    if method == "lp":
        return minimax_lp(g, basis, n, **kw)
    if method == "lsq":
        poly = lsq_approx(g, basis, n)
        D = float(np.max(np.abs(g.values - poly.grid_values())))
        return ApproxResult(poly, float("nan"), D, 1, [(float("nan"), D)], None, True, "lsq")
    raise InputError(f"unknown approximation method {method!r}")


def select_degree(g: SampledFunction, basis: PhiBasis, n_min: int, n_max: int,
                  method: str = "remez", min_gain: float = 0.1) -> ApproxResult:
    """Raise the degree until D gets worse or improves by less than ``min_gain`` (relative)."""
    best = approximate(g, basis, n_min, method)
    for n in range(n_min + 1, n_max + 1):
        cur = approximate(g, basis, n, method)
        if cur.D > best.D * (1 - min_gain):
            break
        best = cur
    return best
