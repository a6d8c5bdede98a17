"""Dense two-phase revised simplex for ``min c^T x  s.t.  A x = b, x >= 0``.

Sized for the minimax problems of :mod:`kleinwave.approx`: few rows (<= ~130)
and many columns. The basis inverse is kept explicitly, updated by pivoting
and refactorized periodically. Pricing is Dantzig's rule; after a run of
degenerate pivots it switches to Bland's rule, which cannot cycle.

Both phases run on a slightly perturbed right-hand side, which removes most
degeneracy; the true right-hand side is restored at the end and any small
infeasibility it causes is repaired by dual simplex pivots. The reported basis
is therefore optimal for the unperturbed problem. If the perturbed problem is
infeasible, the solve falls back to the exact right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError

REFACTOR_EVERY = 50
DEGENERATE_STREAK = 30
PERTURB = 1e-7


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    duals: np.ndarray
    iterations: int
    status: str


class _Tableau:
    def __init__(self, A, b, basis, tol):
        self.A = A
        self.b = b
        self.basis = np.array(basis)
        self.tol = tol
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericError("simplex basis became singular") from exc
        self.xB = self.Binv @ self.b
        self.xB[np.abs(self.xB) < self.tol] = 0.0

    def pivot(self, r, j, w):
        step = self.xB[r] / w[r]
        self.xB = self.xB - step * w
        self.xB[r] = step
        pivot_row = self.Binv[r] / w[r]
        self.Binv -= np.outer(w, pivot_row)
        self.Binv[r] = pivot_row
        self.basis[r] = j

    def dual_repair(self, c, max_iter):
        """Dual simplex pivots until x_B >= 0 (the basis must be dual feasible)."""
        for it in range(max_iter):
            r = int(np.argmin(self.xB))
            if self.xB[r] >= -self.tol:
                return it
            y = c[self.basis] @ self.Binv
            d = c - y @ self.A
            d[self.basis] = 0.0
            alpha = self.Binv[r] @ self.A
            cand = np.flatnonzero(alpha < -self.tol)
            if cand.size == 0:
                raise NumericError("linear program is infeasible")
            ratios = np.maximum(d[cand], 0.0) / -alpha[cand]
            j = int(cand[np.argmin(ratios)])
            self.pivot(r, j, self.Binv @ self.A[:, j])
        raise NumericError(f"dual simplex repair hit the iteration cap ({max_iter})")

    def run(self, c, max_iter, allowed=None):
        m, ncol = self.A.shape
        it = 0
        streak = 0
        while True:
            if it and it % REFACTOR_EVERY == 0:
                self.refactor()
            y = c[self.basis] @ self.Binv
            d = c - y @ self.A
            d[self.basis] = 0.0
            if allowed is not None:
                d[~allowed] = 0.0
            cand = np.flatnonzero(d < -self.tol)
            if cand.size == 0:
                return it, y
            if it >= max_iter:
                raise NumericError(f"simplex hit the iteration cap ({max_iter})")
            bland = streak >= DEGENERATE_STREAK
            j = int(cand[0]) if bland else int(cand[np.argmin(d[cand])])
            w = self.Binv @ self.A[:, j]
            rows = np.flatnonzero(w > self.tol)
            if rows.size == 0:
                raise NumericError("linear program is unbounded")
            ratios = self.xB[rows] / w[rows]
            best = ratios.min()
            ties = rows[ratios <= best + self.tol * max(1.0, abs(best))]
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(w[ties])])
            streak = streak + 1 if self.xB[r] / w[r] <= self.tol else 0
            self.pivot(r, j, w)
            self.xB[np.abs(self.xB) < self.tol * 1e-3] = 0.0
            it += 1


def solve_standard_form(c, A, b, max_iter: int | None = None, tol: float = 1e-10) -> LPResult:
    """Minimize ``c @ x`` subject to ``A @ x == b`` and ``x >= 0``.

    ``duals`` are the simplex multipliers ``y`` (``A.T @ y <= c`` at optimum).
    Raises NumericError if the problem is infeasible or unbounded.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).ravel()
    c = np.array(c, dtype=float).ravel()
    m, n = A.shape
    if max_iter is None:
        max_iter = 50 * (m + n)
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    bmax = max(1.0, float(np.abs(b).max(initial=0.0)))
    rng = np.random.default_rng(0)
    b_work = b + PERTURB * bmax * (1.0 + rng.random(m))

    # Phase 1: artificial identity block. A perturbed right-hand side can leave
    # the range of A (redundant rows) or cut off a thin feasible set; phase 1
    # is then repeated on the exact right-hand side.
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    it1 = 0
    for rhs in (b_work, b):
        tab = _Tableau(A1, rhs, np.arange(n, n + m), tol)
        its, _ = tab.run(c1, max_iter)
        it1 += its
        infeas = float(c1[tab.basis] @ tab.xB)
        if infeas <= tol * bmax * 10:
            break
        b_work = b
    else:
        raise NumericError(f"linear program is infeasible (phase-1 residual {infeas:.2e})")

    # Drive remaining artificials out of the basis; drop redundant rows.
    keep_rows = np.ones(m, dtype=bool)
    for r in range(m):
        if tab.basis[r] < n:
            continue
        row = tab.Binv[r] @ A
        row[tab.basis[tab.basis < n]] = 0.0
        cand = np.flatnonzero(np.abs(row) > 1e-9)
        if cand.size:
            j = int(cand[np.argmax(np.abs(row[cand]))])
            tab.pivot(r, j, tab.Binv @ A1[:, j])
        else:
            keep_rows[r] = False
    if not keep_rows.all():
        A = A[keep_rows]
        b = b[keep_rows]
        b_work = b_work[keep_rows]
        flip = flip[keep_rows]
        basis = tab.basis[keep_rows]
    else:
        basis = tab.basis
    tab2 = _Tableau(A, b_work, basis, tol)
    it2, _ = tab2.run(c, max_iter)
    tab2.b = b
    tab2.refactor()
    it2 += tab2.dual_repair(c, max_iter)
    it3, y = tab2.run(c, max_iter)
    x = np.zeros(n)
    x[tab2.basis] = tab2.xB
    x = np.clip(x, 0.0, None)
    duals = np.zeros(m)
    y = np.where(flip, -y, y)
    duals[keep_rows] = y
    return LPResult(x=x, objective=float(c @ x), duals=duals, iterations=it1 + it2 + it3, status="optimal")
