"""Two-stage stochastic policies.

Every decision enumerates first-stage candidates, samples N futures from
the rate model, scores each candidate by its first-stage cost plus the
average second-stage value, and keeps the argmin.  The three policies
differ only in how a second-stage value is computed: the arc LP, the
itinerary set partition, or a replay of a base heuristic.

Scenarios are seeded from (replication seed, clock, decision kind), so the
three policies see the same futures at the same decision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..arc import (ArcConfig, ArcData, build_second_stage, initial_conditions, post_decision,
                   solve_variants)
from ..core import Call
from ..itinerary import (Emergency, Enumerator, ItineraryConfig, Release, SetPartitionInstance,
                         solve_set_partition)
from ..lp.model import OPTIMAL
from ..scenarios import RateModel, discretize_for_arc_model, sample_scenario
from ..sim import (JOB, TRIP, DispatchEnRoute, DispatchIdle, Enqueue, Relocate, ServeFromQueue,
                   Simulator, SystemState)
from .base import expected_travel_from

SELECT, REASSIGN = 0, 1
SCENARIO_CALL_BASE = 10 ** 9       # ids of sampled calls inside replays


@dataclass
class TwoStageConfig:
    scenarios: int = 15
    horizon: float = 7200.0
    period: float = 1800.0
    m_limit: int = 5
    tie_tol: float = 1e-9

    def __post_init__(self):
        if self.scenarios < 1:
            raise ValueError("need at least one scenario")
        n = self.horizon / self.period
        if self.horizon <= 0 or abs(n - round(n)) > 1e-9:
            raise ValueError("the period must divide the horizon")


# --------------------------------------------------------------------------
# first stage


def enumerate_first_stage(state: SystemState, call: Call | None = None, freed: int | None = None,
                          m_limit: int = 5) -> list:
    """Candidate decisions for a call arrival (``call``) or a completion (``freed``).

    Selection: the ``m_limit`` nearest available ambulances, plus the nearest
    one of any capability missing among them, times the candidate hospitals,
    plus Enqueue.  Reassignment: one ServeFromQueue per queued (type, cell)
    class, plus Relocate to the ``m_limit`` nearest stations with room.
    """
    inst = state.instance
    if call is not None:
        ids = state.available()
        out = []
        if ids:
            tt = expected_travel_from(state, ids, [call.cell])[:, 0]
            ranked = sorted(range(len(ids)), key=lambda i: (tt[i], ids[i]))
            near = ranked[:m_limit]
            # keep the nearest unit of every capability so a matched crew is always an option
            caps = {state.units[ids[i]].capability for i in near}
            for i in ranked[m_limit:]:
                cap = state.units[ids[i]].capability
                if cap not in caps:
                    caps.add(cap)
                    near.append(i)
            for i in sorted(near, key=lambda i: ids[i]):
                cls = DispatchEnRoute if state.is_en_route(ids[i]) else DispatchIdle
                out += [cls(ids[i], call.id, h) for h in inst.hospitals_for(call.ctype, call.cell)]
        out.append(Enqueue(call.id))
        return out
    cell = state.units[freed].free_cell
    out = []
    seen = set()
    for q in state.queue:
        if (q.ctype, q.cell) in seen:        # same class: serve the oldest
            continue
        seen.add((q.ctype, q.cell))
        out += [ServeFromQueue(freed, q.id, h) for h in inst.hospitals_for(q.ctype, q.cell)]
    leg = inst.leg[cell]
    spare = [b for b in range(len(inst.stations)) if state.spare(b) > 0]
    spare.sort(key=lambda b: (leg[inst.station_cells[b]], b))
    out += [Relocate(freed, b) for b in sorted(spare[:m_limit])]
    return out


def expected_response(state: SystemState, cand, call: Call | None) -> float:
    inst = state.instance
    if isinstance(cand, (DispatchIdle, DispatchEnRoute)):
        return float(expected_travel_from(state, [cand.ambulance], [call.cell])[0, 0])
    if isinstance(cand, ServeFromQueue):
        q = state.queued(cand.call)
        return 2.0 * float(inst.leg[state.units[cand.ambulance].free_cell, q.cell])
    if isinstance(cand, Relocate):
        return 2.0 * float(inst.leg[state.units[cand.ambulance].free_cell, inst.station_cells[cand.station]])
    return math.inf


def choose(state: SystemState, cands: list, values, call: Call | None, tol: float = 1e-9):
    """Argmin with ties broken by expected response, then ambulance id, then station id."""
    values = np.asarray(values, dtype=float)
    finite = np.isfinite(values)
    pool = np.flatnonzero(finite) if finite.any() else np.arange(len(cands))
    if finite.any():
        best = values[pool].min()
        pool = pool[values[pool] <= best + tol * max(1.0, abs(best))]

    def key(i):
        c = cands[i]
        return (expected_response(state, c, call), getattr(c, "ambulance", -1),
                getattr(c, "station", -1), i)

    return cands[min(pool, key=key)]


# --------------------------------------------------------------------------


class TwoStagePolicy:
    name = "two-stage"

    def __init__(self, instance, rate_model: RateModel, config: TwoStageConfig | None = None):
        self.instance = instance
        self.rates = rate_model
        self.config = config or TwoStageConfig()
        self.last_values = None
        self.last_candidates = None

    def scenarios(self, state: SystemState, kind: int, n_known: int):
        cfg = self.config
        rng = np.random.default_rng([int(state.seed), int(round(state.clock * 1000)), kind])
        return [sample_scenario(self.rates, state.clock, cfg.horizon, rng, n_known)
                for _ in range(cfg.scenarios)]

    def select(self, state, call):
        return self.decide(state, call=call)

    def reassign(self, state, ambulance):
        return self.decide(state, freed=ambulance)

    def decide(self, state, call=None, freed=None):
        cands = enumerate_first_stage(state, call, freed, self.config.m_limit)
        self.last_candidates = cands
        if len(cands) == 1:
            self.last_values = np.zeros(1)
            return cands[0]
        n_known = len(state.queue) + (call is not None)
        scens = self.scenarios(state, SELECT if call is not None else REASSIGN, n_known)
        values = self.evaluate(state, cands, scens, call, freed)
        self.last_values = values
        return choose(state, cands, values, call, self.config.tie_tol)

    def evaluate(self, state, cands, scens, call, freed) -> np.ndarray:
        raise NotImplementedError


# --------------------------------------------------------------------------
# arc model


class ArcPolicy(TwoStagePolicy):
    """Second stage: the time-expanded LP, one build per scenario shared by all candidates."""
    name = "arc"

    def __init__(self, instance, rate_model, config=None, engine: str = "highs"):
        super().__init__(instance, rate_model, config)
        cfg = self.config
        self.engine = engine
        self.data = ArcData(instance, ArcConfig(period=cfg.period, horizon=int(round(cfg.horizon / cfg.period)),
                                                m_limit=cfg.m_limit))

    def evaluate(self, state, cands, scens, call, freed):
        init = initial_conditions(state, call, freed)
        pairs = [post_decision(self.data, init, c, state) for c in cands]
        posts = [p for p, _ in pairs]
        first = np.array([f for _, f in pairs])
        n_types, n_cells = len(self.instance.types), self.instance.geometry.n_cells
        total = np.zeros(len(cands))
        for sc in scens:
            demand = discretize_for_arc_model(sc, self.config.period, n_types, n_cells)
            problem = build_second_stage(self.data, posts, demand)
            total += self.second_stage(problem)
        return first + total / len(scens)

    def second_stage(self, problem) -> np.ndarray:
        if self.engine != "colgen":
            return np.array(solve_variants(problem, self.engine))
        from ..colgen import solve_colgen
        out = []
        for k in range(len(problem.rhs)):
            if not problem.feasible[k]:
                out.append(math.inf)
                continue
            res = solve_colgen(problem, k, engine="highs")
            out.append(res.solution.objective if res.solution.status == OPTIMAL else math.inf)
        return np.array(out)


# --------------------------------------------------------------------------
# itinerary model


class ItineraryPolicy(TwoStagePolicy):
    """Second stage: set partitioning over enumerated itineraries.

    Idle and en-route ambulances may only serve calls arriving after the
    decision (the simulator hands queued calls to freed ambulances only);
    busy ambulances pick up queued and future calls once free.
    """
    name = "itinerary"

    def __init__(self, instance, rate_model, config=None, itinerary: ItineraryConfig | None = None,
                 node_limit: int = 2_000_000, sp_method: str = "mip"):
        super().__init__(instance, rate_model, config)
        self.itin = itinerary or ItineraryConfig()
        self.node_limit = node_limit
        self.sp_method = sp_method

    def emergencies(self, state, call, sc):
        known = list(state.queue) + ([call] if call is not None else [])
        out = [Emergency(i, q.time, q.ctype, q.cell, tuple(sc.known_uniforms[i]), q.id)
               for i, q in enumerate(known)]
        k = len(out)
        out += [Emergency(k + i, float(t), int(c), int(l), tuple(sc.uniforms[i]))
                for i, (t, c, l) in enumerate(zip(sc.times, sc.types, sc.cells))]
        return out, k

    def release(self, state, a):
        u = state.units[a]
        if u.mode == JOB:
            return Release("free", u.free_at, cell=int(u.free_cell))
        arrive = u.eta if u.mode == TRIP else state.clock
        return Release("moving", state.clock, point=tuple(state.position(a)), station=u.station,
                       arrive=max(arrive, state.clock))

    def forced_dispatch(self, enum, state, a, e):
        """Pool of ``a`` after being sent to emergency ``e`` now from its current position."""
        arrive, free = enum._serve_from_point(tuple(state.position(a)), state.clock, e)
        cost = enum._prt(state.units[a].capability, e, arrive)
        pool = enum.options(a, Release("free", free, cell=int(enum.free_cell[e])), forbid=frozenset([e]))
        return [(m | (1 << e), c + cost) for m, c in pool.items()]

    def evaluate(self, state, cands, scens, call, freed):
        inst = self.instance
        n_amb = len(inst.ambulances)
        vals = np.zeros(len(cands))
        for sc in scens:
            ems, n_known = self.emergencies(state, call, sc)
            enum = Enumerator(inst, ems, state.clock, self.config.horizon, self.itin)
            known = frozenset(range(n_known))
            penalties = np.array([inst.costs.unserved_penalty(inst.types, e.ctype, self.config.horizon)
                                  for e in ems])
            base = {}
            for a in range(n_amb):
                if a == freed:
                    continue
                rel = self.release(state, a)
                forbid = known if rel.kind == "moving" else frozenset()
                base[a] = list(enum.options(a, rel, forbid=forbid).items())
            for k, cand in enumerate(cands):
                pools = dict(base)
                pen = penalties
                if isinstance(cand, (DispatchIdle, DispatchEnRoute)):
                    e0 = n_known - 1
                    pools = {a: [p for p in pool if not p[0] >> e0 & 1] for a, pool in pools.items()}
                    pools[cand.ambulance] = self.forced_dispatch(enum, state, cand.ambulance, e0)
                    pen = penalties.copy()
                    pen[e0] = 0.0
                elif isinstance(cand, ServeFromQueue):
                    e0 = next(i for i, e in enumerate(ems[:n_known]) if e.call_id == cand.call)
                    pools = {a: [p for p in pool if not p[0] >> e0 & 1] for a, pool in pools.items()}
                    rel = Release("free", state.clock, cell=int(state.units[freed].free_cell))
                    pools[freed] = list(enum.options(freed, rel, first_serve=[e0]).items())
                elif isinstance(cand, Relocate):
                    rel = Release("free", state.clock, cell=int(state.units[freed].free_cell))
                    pools[freed] = list(enum.options(freed, rel, first_station=[cand.station]).items())
                vals[k] += self.solve(pools, pen)
        return vals / len(scens)

    def solve(self, pools, penalties) -> float:
        order = sorted(pools)
        masks = [[m for m, _ in pools[a]] for a in order]
        costs = [[c for _, c in pools[a]] for a in order]
        # forced first legs never produce the empty itinerary; a dummy keeps the
        # pool valid and is dominated because it leaves the forced call unserved
        for ms, cs in zip(masks, costs):
            if 0 not in ms:
                ms.append(0)
                cs.append(math.inf)
        sp = SetPartitionInstance(masks, costs, penalties)
        _, obj = solve_set_partition(sp, self.node_limit, method=self.sp_method)
        return obj


# --------------------------------------------------------------------------
# rollout


class RolloutPolicy(TwoStagePolicy):
    """Second stage: replay the base heuristic over each scenario for the horizon."""

    def __init__(self, instance, rate_model, base, config=None):
        super().__init__(instance, rate_model, config)
        self.base = base
        self.name = f"rollout:{base.name}"

    def replay(self, state, cand, sc, call, freed) -> float:
        inst = self.instance
        st = state.clone()
        known = list(state.queue) + ([call] if call is not None else [])
        draws = {q.id: tuple(sc.known_uniforms[i]) for i, q in enumerate(known)}
        calls = []
        for i, (t, c, l) in enumerate(zip(sc.times, sc.types, sc.cells)):
            cid = SCENARIO_CALL_BASE + i
            calls.append(Call(cid, float(t), int(c), int(l)))
            draws[cid] = tuple(sc.uniforms[i])
        skip = frozenset([freed]) if freed is not None else frozenset()
        sim = Simulator(inst, self.base, calls, draws, state=st, stop_at=state.clock + self.config.horizon,
                        time_decisions=False, skip=skip)
        if call is not None:
            st.calls[call.id] = call
            sim.apply(cand, arriving=call)
        else:
            sim.apply(cand, freed=freed)
        sim.run()
        types = inst.types
        left = sum(inst.costs.unserved_penalty(types, q.ctype, self.config.horizon) for q in st.queue)
        return sim.penalty_cost + left

    def evaluate(self, state, cands, scens, call, freed):
        vals = np.zeros(len(cands))
        for sc in scens:
            for k, cand in enumerate(cands):
                vals[k] += self.replay(state, cand, sc, call, freed)
        return vals / len(scens)


__all__ = ["TwoStageConfig", "TwoStagePolicy", "ArcPolicy", "ItineraryPolicy", "RolloutPolicy",
           "enumerate_first_stage", "choose", "expected_response"]
