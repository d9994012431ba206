"""Dense two-phase primal simplex with Bland's anti-cycling rule.

Solves ``min c.x  s.t.  A x = b, x >= 0`` for a full-row-rank ``A`` with few
rows and many columns.  The basis inverse is recomputed from scratch every
iteration; with at most a few dozen rows that is cheap and keeps round-off
from accumulating.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LPError(RuntimeError):
    pass


class InfeasibleLP(LPError):
    pass


class UnboundedLP(LPError):
    pass


class IterationLimit(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    basis: np.ndarray
    objective: float
    iterations: int


def _solve_phase(A, b, c, basis, tol, max_iter, allowed, it0):
    it = it0
    rc_tol = tol * max(1.0, float(np.abs(c).max()))
    while True:
        B = A[:, basis]
        xB = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, c[basis])
        red = c - A.T @ y
        red[basis] = 0.0
        cand = np.flatnonzero((red < -rc_tol) & allowed)
        if cand.size == 0:
            return basis, xB, y, red, it
        if it >= max_iter:
            raise IterationLimit(f"simplex did not converge in {max_iter} iterations")
        enter = cand[0]
        d = np.linalg.solve(B, A[:, enter])
        rows = np.flatnonzero(d > tol)
        if rows.size == 0:
            raise UnboundedLP(f"column {enter} is an unbounded direction")
        ratios = np.maximum(xB[rows], 0.0) / d[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol]
        leave = ties[np.argmin(basis[ties])]
        basis = basis.copy()
        basis[leave] = enter
        it += 1


def simplex(c, A, b, tol: float = 1e-10, max_iter: int = 50_000) -> LPResult:
    """Minimise ``c.x`` subject to ``A x = b``, ``x >= 0``.

    Phase one starts from an all-artificial basis.  Entering columns follow
    Bland's rule (lowest index with negative reduced cost); leaving rows use
    the minimum ratio with ties broken by lowest basic index.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if np.any(b < 0):
        flip = b < 0
        A = A.copy()
        b = b.copy()
        A[flip] *= -1
        b[flip] *= -1

    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = np.arange(n, n + m)
    allowed = np.ones(n + m, dtype=bool)
    basis, xB, _, _, it = _solve_phase(A1, b, c1, basis, tol, max_iter, allowed, 0)
    infeas = float(c1[basis] @ xB)
    if infeas > 1e-8 * (1 + np.abs(b).sum()):
        raise InfeasibleLP(f"phase one ended with artificial mass {infeas:.3e}")

    # pivot zero-level artificials out of the basis
    for r in range(m):
        if basis[r] < n:
            continue
        B = A1[:, basis]
        row = np.linalg.solve(B.T, np.eye(m)[r]) @ A
        row[basis[basis < n]] = 0.0
        nz = np.flatnonzero(np.abs(row) > 1e-9)
        if nz.size:
            basis = basis.copy()
            basis[r] = nz[0]
    allowed[n:] = False
    c2 = np.concatenate([c, np.zeros(m)])
    basis, xB, y, red, it = _solve_phase(A1, b, c2, basis, tol, max_iter, allowed, it)

    x = np.zeros(n + m)
    x[basis] = xB
    x = x[:n]
    x[x < 0] = 0.0
    return LPResult(x=x, duals=y, reduced_costs=red[:n], basis=basis,
                    objective=float(c @ x), iterations=it)
