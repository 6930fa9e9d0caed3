"""Linear program container, solution record and the text dump format."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL = "numerical"


class LpError(RuntimeError):
    pass


@dataclass
class LinearProgram:
    """min c.x + offset  s.t.  A x (= or <=) b,  0 <= x <= upper.

    ``is_eq[i]`` marks equality rows; all other rows are ``<=``.
    """
    cost: np.ndarray
    matrix: sparse.csc_matrix
    rhs: np.ndarray
    is_eq: np.ndarray
    upper: np.ndarray | None = None
    offset: float = 0.0
    col_names: list | None = None
    row_names: list | None = None

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.is_eq = np.asarray(self.is_eq, dtype=bool)
        self.matrix = sparse.csc_matrix(self.matrix, dtype=float)
        m, n = self.matrix.shape
        if self.cost.shape != (n,) or self.rhs.shape != (m,) or self.is_eq.shape != (m,):
            raise LpError(f"shape mismatch: A is {m}x{n}, c {self.cost.shape}, b {self.rhs.shape}")
        if self.upper is None:
            self.upper = np.full(n, np.inf)
        self.upper = np.asarray(self.upper, dtype=float)
        if not (np.all(np.isfinite(self.cost)) and np.all(np.isfinite(self.rhs))
                and np.all(np.isfinite(self.matrix.data))):
            raise LpError("nonfinite coefficient")
        if np.any(self.upper < 0):
            raise LpError("negative upper bound")

    @classmethod
    def from_triplets(cls, cost, rows, cols, vals, rhs, is_eq, upper=None, **kw):
        m, n = len(rhs), len(cost)
        rows, cols = np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)
        if len(rows) and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
            raise LpError("triplet index out of range")
        mat = sparse.coo_matrix((np.asarray(vals, dtype=float), (rows, cols)), shape=(m, n))
        return cls(np.asarray(cost, dtype=float), mat.tocsc(), rhs, is_eq, upper, **kw)

    @property
    def shape(self):
        return self.matrix.shape

    def with_rhs(self, rhs) -> "LinearProgram":
        return LinearProgram(self.cost, self.matrix, rhs, self.is_eq, self.upper, self.offset,
                             self.col_names, self.row_names)

    def subset(self, cols) -> "LinearProgram":
        cols = np.asarray(cols, dtype=np.int64)
        names = [self.col_names[j] for j in cols] if self.col_names else None
        return LinearProgram(self.cost[cols], self.matrix[:, cols], self.rhs, self.is_eq,
                             self.upper[cols], self.offset, names, self.row_names)


@dataclass
class LpSolution:
    status: str
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: float = float("nan")
    reduced: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def check_certificate(lp: LinearProgram, sol: LpSolution, tol: float = 1e-7) -> list[str]:
    """Return violated optimality conditions (empty when the pair is certified).

    Duals follow the convention reduced = c - A^T y, so ``<=`` rows carry
    y <= 0 in a minimization.
    """
    problems = []
    A = lp.matrix
    x, y = sol.x, sol.duals
    scale = 1.0 + np.abs(lp.rhs).max(initial=0.0)
    act = A @ x
    if np.any(x < -tol) or np.any(x > lp.upper + tol):
        problems.append("bounds")
    eq = lp.is_eq
    if np.any(np.abs(act[eq] - lp.rhs[eq]) > tol * scale) or np.any(act[~eq] > lp.rhs[~eq] + tol * scale):
        problems.append("primal feasibility")
    if np.any(y[~eq] > tol):
        problems.append("dual sign")
    red = lp.cost - A.T @ y
    finite_ub = np.isfinite(lp.upper)
    at_ub = finite_ub & (x > lp.upper - tol)
    if np.any(red[~at_ub] < -tol * (1 + np.abs(lp.cost[~at_ub]))):
        problems.append("dual feasibility")
    slack = lp.rhs - act
    if np.any(np.abs(y[~eq] * slack[~eq]) > tol * scale):
        problems.append("complementary slackness (rows)")
    free = ~at_ub
    if np.any(np.abs(red[free] * x[free]) > tol * scale * (1 + np.abs(lp.cost[free]))):
        problems.append("complementary slackness (columns)")
    dual_obj = lp.rhs @ y + np.minimum(red, 0.0)[finite_ub] @ lp.upper[finite_ub]
    primal_obj = lp.cost @ x
    if abs(primal_obj - dual_obj) > tol * (1 + abs(primal_obj)) * 10:
        problems.append("strong duality")
    return problems


def dump(lp: LinearProgram) -> str:
    """Fixed human-readable rendering, one row per line."""
    m, n = lp.shape
    cname = lp.col_names or [f"x{j}" for j in range(n)]
    rname = lp.row_names or [f"r{i}" for i in range(m)]
    out = io.StringIO()
    out.write(f"LP {m} rows {n} cols offset {lp.offset:.12g}\n")
    out.write("MIN\n")
    for j in range(n):
        if lp.cost[j]:
            out.write(f"  {lp.cost[j]:+.12g} {cname[j]}\n")
    out.write("ROWS\n")
    csr = lp.matrix.tocsr()
    for i in range(m):
        lo, hi = csr.indptr[i], csr.indptr[i + 1]
        terms = " ".join(f"{v:+.12g} {cname[j]}" for j, v in zip(csr.indices[lo:hi], csr.data[lo:hi]))
        op = "=" if lp.is_eq[i] else "<="
        out.write(f"  {rname[i]}: {terms or '0'} {op} {lp.rhs[i]:.12g}\n")
    bounded = [j for j in range(n) if np.isfinite(lp.upper[j])]
    if bounded:
        out.write("BOUNDS\n")
        for j in bounded:
            out.write(f"  0 <= {cname[j]} <= {lp.upper[j]:.12g}\n")
    out.write("END\n")
    return out.getvalue()
