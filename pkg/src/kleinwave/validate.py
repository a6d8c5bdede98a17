"""Self-checks of the transmutation machinery, reported as a pass/fail table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SampledFunction, build_basis, f_derivative
from .spps import particular_solution
from .transmute import (
    apply_T,
    apply_T_inverse,
    build_kernel,
    constant_potential_kernel,
    kernel_estimate,
)

# Relative slack on the kernel inequality: equality holds for some potentials
# and the kernel is computed to ~1e-13.
BOUND_SLACK = 1e-10
BOUND_FLOOR = 1e-14


@dataclass(frozen=True)
class Check:
    name: str
    case: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)


CASES = {
    "q=0": (lambda x: 0 * x, 0.0),
    "q=9": (lambda x: 9.0 + 0 * x, 3.0),
    "q=x^2": (lambda x: x * x, 0.0),
    "q=-25": (lambda x: -25.0 + 0 * x, 5j),
}


def bound_violation(kernel, q_max: float) -> float:
    """max over diamond nodes of (|K| - bound) / (bound * slack + floor); <= 1 means the inequality holds."""
    x, t, K = kernel.xt_values()
    rhs = kernel_estimate(x, t, q_max, kernel.h)
    return float(np.max((np.abs(K) - rhs) / (rhs * BOUND_SLACK + BOUND_FLOOR)))


def mapping_errors(kernel, basis, kmax: int) -> tuple[float, float]:
    """(max_k rel |T[x^k] - phi_k|, max_k |T^-1 T x^k - x^k| / max|x^k|) on the kernel x-grid."""
    b = basis.b
    xg = kernel.x_grid()
    fwd = inv = 0.0
    for k in range(kmax + 1):
        u = SampledFunction.from_callable(lambda x, k=k: x**k, b, n=basis.f.N,
                                          interp_order=basis.f.interp_order)
        Tu = apply_T(kernel, u)
        ref = basis.phi[k](xg)
        fwd = max(fwd, float(np.max(np.abs(Tu.values - ref)) / np.max(np.abs(ref))))
        back = apply_T_inverse(kernel, Tu)
        inv = max(inv, float(np.max(np.abs(back.values - xg**k)) / max(b**k, 1e-300)))
    return fwd, inv


def ladder_errors(basis, kmax: int) -> tuple[float, float]:
    """Relative errors of d1 phi_k = k psi_{k-1} and d2 phi_k = k(k-1) phi_{k-2}."""
    e1 = e2 = 0.0
    for k in range(1, kmax + 1):
        d1 = f_derivative(basis.phi[k], basis, 1).values
        ref = k * basis.psi[k - 1].values
        e1 = max(e1, float(np.max(np.abs(d1 - ref)) / np.max(np.abs(ref))))
        if k >= 2:
            d2 = f_derivative(basis.phi[k], basis, 2).values
            ref = k * (k - 1) * basis.phi[k - 2].values
            e2 = max(e2, float(np.max(np.abs(d2 - ref)) / np.max(np.abs(ref))))
    return e1, e2


def run_validation(quick: bool = False, b: float = 1.0) -> list[Check]:
    M = 128 if quick else 512
    kmax = 4 if quick else 8
    checks: list[Check] = []
    for case, (func, h) in CASES.items():
        q = SampledFunction.from_callable(func, b)
        kernel = build_kernel(q, h, M=M)
        q_max = float(np.max(np.abs(q.values)))
        basis = build_basis(particular_solution(q, h), kmax, h=h)
        exact_tol = 1e-12 if case == "q=0" else 1e-4
        fwd, inv = mapping_errors(kernel, basis, kmax)
        checks.append(Check("T[x^k] = phi_k", case, fwd, exact_tol))
        checks.append(Check("T^-1 T = id", case, inv, exact_tol))
        checks.append(Check("kernel bound (scaled excess)", case, bound_violation(kernel, q_max), 1.0))
        if case == "q=9":
            x, t, K = kernel.xt_values()
            sel = (t >= 0) & (t <= x)
            Kc = constant_potential_kernel(x[sel], t[sel], 9.0, h)
            rel = float(np.max(np.abs(K[sel] - Kc)) / np.max(np.abs(Kc)))
            checks.append(Check("kernel = Bessel closed form", case, rel, 1e-6))
    return checks


def format_table(checks: list[Check]) -> str:
    lines = [f"{'check':<30} {'case':<7} {'value':>10} {'tol':>8}  result"]
    for c in checks:
        lines.append(f"{c.name:<30} {c.case:<7} {c.value:>10.2e} {c.tol:>8.0e}  "
                     f"{'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)
