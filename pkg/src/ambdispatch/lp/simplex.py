"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Intended for desk-scale problems (a few hundred rows).  The tableau keeps
the artificial columns through phase 2 so that B^-1, and hence the row
duals, can be read off directly at the end.
"""
from __future__ import annotations

import numpy as np

from .model import (INFEASIBLE, NUMERICAL, OPTIMAL, UNBOUNDED, LinearProgram,
                    LpSolution, check_certificate)

PIVOT_TOL = 1e-11


class _Tableau:
    def __init__(self, A, b):
        m, n = A.shape
        self.m, self.n = m, n
        self.T = np.zeros((m, n + m + 1))
        self.T[:, :n] = A
        self.T[:, n:n + m] = np.eye(m)
        self.T[:, -1] = b
        self.basis = list(range(n, n + m))
        self.red = np.zeros(n + m + 1)
        self.iterations = 0

    def price(self, cost):
        """Set the reduced-cost row for a full cost vector (length n+m)."""
        cb = cost[self.basis]
        self.red[:-1] = cost - cb @ self.T[:, :-1]
        self.red[-1] = -(cb @ self.T[:, -1])

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.red -= self.red[j] * T[r]
        self.basis[r] = j
        self.iterations += 1

    def run(self, allowed, rc_tol, max_iter):
        T = self.T
        while True:
            cand = np.flatnonzero((self.red[:-1] < -rc_tol) & allowed)
            if cand.size == 0:
                return OPTIMAL
            if self.iterations >= max_iter:
                return NUMERICAL
            j = int(cand[0])
            colj = T[:, j]
            rows = np.flatnonzero(colj > PIVOT_TOL)
            if rows.size == 0:
                return UNBOUNDED
            ratios = T[rows, -1] / colj[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = min(ties, key=lambda i: self.basis[i])
            self.pivot(int(r), j)


def solve(lp: LinearProgram, tol: float = 1e-9, rc_tol: float = 1e-7,
          max_iter: int = 100_000) -> LpSolution:
    A0 = lp.matrix.toarray()
    m0, n0 = A0.shape
    ub_cols = np.flatnonzero(np.isfinite(lp.upper))
    # explicit upper-bound rows, then one slack per inequality row
    ub_rows = np.zeros((len(ub_cols), n0))
    ub_rows[np.arange(len(ub_cols)), ub_cols] = 1.0
    A = np.vstack([A0, ub_rows])
    b = np.concatenate([lp.rhs, lp.upper[ub_cols]])
    eq = np.concatenate([lp.is_eq, np.zeros(len(ub_cols), dtype=bool)])
    m = A.shape[0]
    ineq = np.flatnonzero(~eq)
    S = np.zeros((m, len(ineq)))
    S[ineq, np.arange(len(ineq))] = 1.0
    A = np.hstack([A, S])
    n = A.shape[1]
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign

    tab = _Tableau(A, b)
    allowed = np.ones(n + m, dtype=bool)
    # phase 1: drive artificials to zero
    tab.price(np.concatenate([np.zeros(n), np.ones(m)]))
    status = tab.run(allowed, rc_tol * 1e-2, max_iter)
    if status == NUMERICAL:
        return LpSolution(NUMERICAL, iterations=tab.iterations, message="iteration cap in phase 1")
    infeas = -tab.red[-1]
    if infeas > tol * max(1.0, np.abs(b).max(initial=0.0)) * 10:
        return LpSolution(INFEASIBLE, iterations=tab.iterations)
    # pivot remaining zero-valued artificials out where possible
    for r in range(m):
        if tab.basis[r] >= n:
            nz = np.flatnonzero(np.abs(tab.T[r, :n]) > 1e-9)
            if nz.size:
                tab.pivot(r, int(nz[0]))
    allowed[n:] = False
    cost = np.concatenate([lp.cost, np.zeros(n - n0), np.zeros(m)])
    tab.price(cost)
    status = tab.run(allowed, rc_tol, max_iter)
    if status != OPTIMAL:
        return LpSolution(status, iterations=tab.iterations)

    xfull = np.zeros(n + m)
    xfull[tab.basis] = tab.T[:, -1]
    x = np.clip(xfull[:n0], 0.0, None)
    binv = tab.T[:, n:n + m]
    y_all = (cost[tab.basis] @ binv) * sign
    y = y_all[:m0]
    sol = LpSolution(OPTIMAL, x=x, duals=y, objective=float(lp.cost @ x + lp.offset),
                     reduced=lp.cost - lp.matrix.T @ y, iterations=tab.iterations)
    problems = check_certificate(lp, sol, tol=max(1e-6, tol * 100))
    if problems:
        sol.status = NUMERICAL
        sol.message = "; ".join(problems)
    return sol
