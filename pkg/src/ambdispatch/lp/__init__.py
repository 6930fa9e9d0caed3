from .model import (INFEASIBLE, NUMERICAL, OPTIMAL, UNBOUNDED, LinearProgram, LpError,
                    LpSolution, check_certificate, dump)
from .oracle import OracleResult, vertex_enumeration_oracle
from .simplex import solve

ENGINES = ("simplex", "highs")


def solve_with(lp: LinearProgram, engine: str = "simplex") -> LpSolution:
    if engine == "simplex":
        return solve(lp)
    if engine == "highs":
        from .highs import solve_highs
        return solve_highs(lp)
    raise ValueError(f"unknown LP engine {engine!r}")


__all__ = ["LinearProgram", "LpSolution", "LpError", "solve", "solve_with", "dump",
           "check_certificate", "vertex_enumeration_oracle", "OracleResult",
           "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "NUMERICAL", "ENGINES"]
