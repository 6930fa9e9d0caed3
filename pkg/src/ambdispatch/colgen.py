"""Column generation for the arc model's second-stage LP.

The restricted master starts with the relocation and state columns (always
feasible: everyone heads to a station and every call waits) and prices only
dispatch columns.  Duals are reported with the sign convention of the
pricing formulas, pi = -y, where y are the solver's row duals; with that
convention every dispatch column's reduced cost is c_j + sum_i pi_i A_ij.

The scalar ``reduced_cost_*`` helpers implement the per-family pricing with
the critical type / hospital / station shortcuts.  They are exact when the
dispatch cost and duration do not depend on the call type (and, for en-route
dispatches, on the destination station).  The default cost model charges
urgency-weighted response time, so the production pass in
:func:`generate_columns` takes the exhaustive minimum over every
(type, hospital, station) instead; it is vectorized and therefore cheap.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .arc import (R_BOUND, R_CAP, R_ENROUTE, R_HOSP, R_QUEUE, R_STATION, R_SUP_E,
                  R_SUP_S, XE, XH, XS, Y, ArcProblem)
from .lp import LpSolution, solve_with
from .lp.model import INFEASIBLE, NUMERICAL, OPTIMAL

FAMILY_RANK = {XS: 0, XH: 1, XE: 2}


@dataclass
class DualSolution:
    beta: dict = field(default_factory=dict)     # (t, a, b)        station flow
    alpha: dict = field(default_factory=dict)    # (t, a, h)        hospital flow
    psi: dict = field(default_factory=dict)      # (t, a, b, cell)  intermediate cells
    phi: dict = field(default_factory=dict)      # (t, c, l)        queues
    nu: dict = field(default_factory=dict)       # (t, b)           capacity, >= 0
    theta: dict = field(default_factory=dict)    # (t, a, b, cell)  en-route supply, >= 0
    gamma: dict = field(default_factory=dict)    # (t, a, b)        station supply, >= 0
    zeta: dict = field(default_factory=dict)     # (t, c, l)        dispatch bound, >= 0

    _FIELDS = {R_STATION: "beta", R_HOSP: "alpha", R_ENROUTE: "psi", R_QUEUE: "phi",
               R_CAP: "nu", R_SUP_E: "theta", R_SUP_S: "gamma", R_BOUND: "zeta"}

    @classmethod
    def from_rows(cls, row_keys, y) -> "DualSolution":
        d = cls()
        for key, v in zip(row_keys, y):
            getattr(d, cls._FIELDS[key[0]])[key[1:]] = -float(v)
        return d

    def sign_ok(self, tol=1e-9) -> bool:
        return all(v >= -tol for m in (self.nu, self.theta, self.gamma, self.zeta) for v in m.values())


# --------------------------------------------------------------------------
# scalar pricing with critical-index shortcuts


@dataclass
class PricingTables:
    """What the scalar pricing needs to know about a model.

    ``cost(c, a, origin, l, h)`` and ``tau(c, a, origin, l, h)`` take the
    origin cell; ``hospitals(c, l)`` lists hospital nodes; ``stations_for(t,
    a, cell)`` lists stations b with an en-route state at ``cell``;
    ``next_cell(cell, b)`` and ``station_cell(b)`` describe motion.
    """
    n_types: int
    horizon: int
    cost: Callable
    tau: Callable
    hospitals: Callable
    stations_for: Callable
    next_cell: Callable
    station_cell: Callable
    enroute_state: Callable = lambda t, a, b, cell: True


def _alpha(duals, t, a, h, T):
    return duals.alpha.get((t, a, h), 0.0) if t <= T else 0.0


def _critical_type(duals, t, l, n_types):
    vals = [duals.phi.get((t, c, l), 0.0) + duals.zeta.get((t, c, l), 0.0) for c in range(n_types)]
    return int(np.argmin(vals)), min(vals)


def _critical_hospital(tab, duals, t, c, a, origin, l):
    best, arg = np.inf, None
    for h in tab.hospitals(c, l):
        v = tab.cost(c, a, origin, l, h) - _alpha(duals, t + tab.tau(c, a, origin, l, h), a, h, tab.horizon)
        if v < best - 1e-15:
            best, arg = v, h
    return arg, best


def reduced_cost_station_dispatch(tab: PricingTables, duals: DualSolution, t, a, b, l):
    c_hat, qv = _critical_type(duals, t, l, tab.n_types)
    origin = tab.station_cell(b)
    h_hat, hv = _critical_hospital(tab, duals, t, c_hat, a, origin, l)
    value = hv + duals.beta.get((t, a, b), 0.0) + qv + duals.gamma.get((t, a, b), 0.0)
    return value, c_hat, h_hat


def reduced_cost_hospital_dispatch(tab: PricingTables, duals: DualSolution, t, a, h_from, l):
    c_hat, qv = _critical_type(duals, t, l, tab.n_types)
    h_hat, hv = _critical_hospital(tab, duals, t, c_hat, a, h_from, l)
    value = hv + duals.alpha.get((t, a, h_from), 0.0) + qv
    return value, c_hat, h_hat


def enroute_station_term(tab: PricingTables, duals, t, a, cell, b):
    nxt = tab.next_cell(cell, b)
    if nxt == tab.station_cell(b):
        move = duals.beta.get((t, a, b), 0.0)
    else:
        move = duals.psi.get((t, a, b, nxt), 0.0) if tab.enroute_state(t, a, b, nxt) else 0.0
    return move + duals.theta.get((t, a, b, cell), 0.0)


def reduced_cost_enroute_dispatch(tab: PricingTables, duals: DualSolution, t, a, cell, l):
    """Returns None when no station has an en-route state at ``cell`` (no such variable)."""
    stations = list(tab.stations_for(t, a, cell))
    if not stations:
        return None
    c_star, qv = _critical_type(duals, t, l, tab.n_types)
    h_star, hv = _critical_hospital(tab, duals, t, c_star, a, cell, l)
    terms = [enroute_station_term(tab, duals, t, a, cell, b) for b in stations]
    k = int(np.argmin(terms))
    return hv + terms[k] + qv, c_star, stations[k], h_star


# --------------------------------------------------------------------------
# vectorized pricing over an arc problem


def reduced_costs(problem: ArcProblem, y: np.ndarray) -> np.ndarray:
    """c - A^T y for every column of the full problem (solver dual convention)."""
    return problem.lp.cost - problem.lp.matrix.T @ y


def generate_columns(problem: ArcProblem, in_master: np.ndarray, rc: np.ndarray,
                     tol: float = 1e-9) -> np.ndarray:
    """Pick at most one new dispatch column per (t, a, call cell).

    Within a group, origins are scanned stations first, then hospital nodes,
    then intermediate cells, each from nearest to farthest; the first origin
    with a negative reduced cost contributes its cheapest column.
    """
    cols = problem.index.cols
    fam = cols["fam"]
    cand = np.flatnonzero((fam <= XH) & ~in_master & (rc < -tol))
    if cand.size == 0:
        return cand
    data = problem.data
    org = cols["org"][cand]
    origin_cell = np.where(fam[cand] == XS, data.station_cell[np.maximum(cols["b"][cand], 0)], org)
    dist = data.instance.geometry.travel_matrix[origin_cell, cols["l"][cand]]
    rank = np.vectorize(FAMILY_RANK.get)(fam[cand])
    order = np.lexsort((rc[cand], org, np.round(dist, 6), rank,
                        cols["l"][cand], cols["a"][cand], cols["t"][cand]))
    c = cand[order]
    key = np.stack([cols["t"][c], cols["a"][c], cols["l"][c]], axis=1)
    first = np.ones(len(c), dtype=bool)
    first[1:] = np.any(key[1:] != key[:-1], axis=1)
    return c[first]


@dataclass
class ColgenResult:
    solution: LpSolution
    iterations: int
    added: int
    history: list
    master: np.ndarray


def solve_colgen(problem: ArcProblem, variant: int = 0, engine: str = "simplex", tol: float = 1e-9,
                 trace: Callable[[str], None] | None = None, max_iter: int | None = None) -> ColgenResult:
    lp = problem.variant(variant)
    fam = problem.index.cols["fam"]
    in_master = fam >= Y
    history, added, it = [], 0, 0
    while True:
        it += 1
        cap = max_iter if max_iter is not None else 10 * added + 100
        if it > cap:
            return ColgenResult(LpSolution(NUMERICAL, message=f"iteration cap {cap} reached"),
                                it, added, history, in_master)
        ids = np.flatnonzero(in_master)
        t0 = time.perf_counter()
        sol = solve_with(lp.subset(ids), engine)
        if sol.status == INFEASIBLE and not in_master.all():
            # seed plan blocked (e.g. capacities): fall back to the full universe
            in_master[:] = True
            continue
        if sol.status != OPTIMAL:
            return ColgenResult(sol, it, added, history, in_master)
        history.append(sol.objective)
        rc = reduced_costs(problem, sol.duals)
        new = generate_columns(problem, in_master, rc, tol=max(tol, 1e-7))
        if trace:
            trace(f"iter {it} obj {sol.objective:.9g} added {len(new)} "
                  f"wall {time.perf_counter() - t0:.4f}s")
        if new.size == 0:
            x = np.zeros(len(fam))
            x[ids] = sol.x
            full = LpSolution(OPTIMAL, x=x, duals=sol.duals, objective=sol.objective,
                              reduced=rc, iterations=it)
            return ColgenResult(full, it, added, history, in_master)
        in_master[new] = True
        added += len(new)


def arc_pricing_tables(problem: ArcProblem) -> PricingTables:
    """Adapter exposing an arc problem's data to the scalar pricing helpers."""
    data = problem.data
    inst = data.instance
    enroute = {}
    for key in problem.index.row_keys:
        if key[0] == R_SUP_E:
            _, t, a, b, cell = key
            enroute.setdefault((t, a, cell), []).append(b)
    rows = problem.index.row_ids

    def cost(c, a, origin, l, h):
        return float(data.dispatch_cost(inst.ambulances[a].capability, origin, c, l))

    def tau(c, a, origin, l, h):
        return int(data.tau(origin, c, l, h))

    return PricingTables(
        n_types=data.n_types, horizon=data.config.horizon, cost=cost, tau=tau,
        hospitals=lambda c, l: [int(h) for h in data.demand_hospitals[c, l]],
        stations_for=lambda t, a, cell: sorted(enroute.get((t, a, cell), [])),
        next_cell=data.next_cell, station_cell=lambda b: int(data.station_cell[b]),
        enroute_state=lambda t, a, b, cell: (R_ENROUTE, t, a, b, cell) in rows)
