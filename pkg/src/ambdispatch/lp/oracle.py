"""Brute-force LP oracle: enumerate every basis of the standard form.

Exponential by design; only meant to cross-check the simplex on tiny LPs.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .model import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram

MAX_SIZE = 12


@dataclass
class OracleResult:
    status: str
    objective: float = float("nan")
    x: np.ndarray | None = None


def _independent_rows(M, rhs, tol):
    """Drop dependent rows; return None when the system is inconsistent."""
    keep = []
    for i in range(M.shape[0]):
        trial = keep + [i]
        if np.linalg.matrix_rank(M[trial], tol=tol) == len(trial):
            keep = trial
    rank = len(keep)
    if np.linalg.matrix_rank(np.column_stack([M, rhs]), tol=tol) > rank:
        return None
    return M[keep], rhs[keep]


def _basic_solutions(M, rhs, tol=1e-9):
    red = _independent_rows(M, rhs, tol)
    if red is None:
        return
    M, rhs = red
    r, n = M.shape
    if r == 0:
        yield np.zeros(n)
        return
    for cols in combinations(range(n), r):
        B = M[:, cols]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        xb = np.linalg.solve(B, rhs)
        if np.all(xb >= -tol):
            x = np.zeros(n)
            x[list(cols)] = np.clip(xb, 0.0, None)
            yield x


def vertex_enumeration_oracle(lp: LinearProgram, tol: float = 1e-9) -> OracleResult:
    m0, n0 = lp.shape
    ub_cols = np.flatnonzero(np.isfinite(lp.upper))
    if m0 + len(ub_cols) + n0 > MAX_SIZE:
        raise ValueError(f"oracle refuses LPs with m+n > {MAX_SIZE}")
    A = lp.matrix.toarray()
    ub = np.zeros((len(ub_cols), n0))
    ub[np.arange(len(ub_cols)), ub_cols] = 1.0
    A = np.vstack([A, ub])
    b = np.concatenate([lp.rhs, lp.upper[ub_cols]])
    eq = np.concatenate([lp.is_eq, np.zeros(len(ub_cols), dtype=bool)])
    ineq = np.flatnonzero(~eq)
    S = np.zeros((A.shape[0], len(ineq)))
    S[ineq, np.arange(len(ineq))] = 1.0
    A = np.hstack([A, S])
    c = np.concatenate([lp.cost, np.zeros(len(ineq))])

    best, arg = np.inf, None
    for x in _basic_solutions(A, b, tol):
        val = c @ x
        if val < best - 1e-12:
            best, arg = val, x
    if arg is None:
        return OracleResult(INFEASIBLE)
    # extreme rays of {A d = 0, d >= 0, sum d = 1}
    R = np.vstack([A, np.ones(A.shape[1])])
    rr = np.concatenate([np.zeros(A.shape[0]), [1.0]])
    for d in _basic_solutions(R, rr, tol):
        if c @ d < -1e-9:
            return OracleResult(UNBOUNDED)
    return OracleResult(OPTIMAL, float(best + lp.offset), arg[:n0])
