"""Persistent HiGHS model for repeated solves that differ only in bounds or rhs.

HiGHS keeps the last basis, so a changed right-hand side re-solves from a
warm start.  Duals use the same convention as the dense simplex.
"""
from __future__ import annotations

import highspy
import numpy as np

from .model import INFEASIBLE, NUMERICAL, OPTIMAL, UNBOUNDED, LinearProgram, LpSolution

_STATUS = {
    highspy.HighsModelStatus.kOptimal: OPTIMAL,
    highspy.HighsModelStatus.kInfeasible: INFEASIBLE,
    highspy.HighsModelStatus.kUnbounded: UNBOUNDED,
    highspy.HighsModelStatus.kUnboundedOrInfeasible: INFEASIBLE,
}


class HighsModel:
    def __init__(self, lp: LinearProgram):
        self.lp = lp
        self.h = highspy.Highs()
        self.h.setOptionValue("output_flag", False)
        self.h.setOptionValue("threads", 1)
        m, n = lp.shape
        model = highspy.HighsLp()
        model.num_col_, model.num_row_ = n, m
        model.col_cost_ = lp.cost
        model.col_lower_ = np.zeros(n)
        model.col_upper_ = lp.upper.copy()
        model.row_lower_ = np.where(lp.is_eq, lp.rhs, -np.inf)
        model.row_upper_ = lp.rhs.copy()
        mat = lp.matrix.tocsc()
        model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        model.a_matrix_.start_ = mat.indptr.astype(np.int32)
        model.a_matrix_.index_ = mat.indices.astype(np.int32)
        model.a_matrix_.value_ = mat.data
        model.offset_ = lp.offset
        self.h.passModel(model)
        self.rhs = lp.rhs.copy()

    def set_rhs(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        changed = np.flatnonzero(rhs != self.rhs)
        if changed.size:
            eq = self.lp.is_eq[changed]
            lower = np.where(eq, rhs[changed], -np.inf)
            self.h.changeRowsBounds(changed.size, changed.astype(np.int32), lower, rhs[changed])
            self.rhs = rhs.copy()

    def set_upper(self, cols, upper):
        cols = np.asarray(cols, dtype=np.int32)
        if cols.size:
            self.h.changeColsBounds(cols.size, cols, np.zeros(cols.size), np.asarray(upper, dtype=float))

    def solve(self, want_duals: bool = True) -> LpSolution:
        self.h.run()
        status = _STATUS.get(self.h.getModelStatus(), NUMERICAL)
        if status != OPTIMAL:
            return LpSolution(status, message=str(self.h.getModelStatus()))
        sol = self.h.getSolution()
        x = np.asarray(sol.col_value)
        out = LpSolution(OPTIMAL, x=x, objective=float(self.h.getInfo().objective_function_value))
        if want_duals:
            out.duals = np.asarray(sol.row_dual)
            out.reduced = np.asarray(sol.col_dual)
        return out


def solve_highs(lp: LinearProgram) -> LpSolution:
    return HighsModel(lp).solve()
