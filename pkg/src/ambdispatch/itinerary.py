"""Itinerary enumeration and the per-scenario set-partitioning problem.

An itinerary is one ambulance's plan over [now, now + T]: a sequence of
emergency legs (travel, scene, transport, handoff) and station legs.  The
set-partitioning problem picks one itinerary per ambulance, serving each
emergency at most once and paying a penalty for every emergency left out.

Emergency legs use the scenario's pre-drawn uniforms; station legs use the
expected travel time.  Only the cheapest itinerary per (ambulance, served
set) can ever be optimal, so pools are reduced to those before solving.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Instance, penalized_response_time
from .laws import (U_MEAN, sample_hospital_time, sample_scene_time,
                   sample_travel_time)


@dataclass(frozen=True)
class Emergency:
    id: int            # index within the scenario's emergency list
    time: float        # arrival t1
    ctype: int
    cell: int
    uniforms: tuple    # (to scene, scene, to hospital, handoff)
    call_id: int = -1  # simulator call id for known calls


@dataclass(frozen=True)
class Leg:
    kind: str          # "serve" or "station"
    target: int        # emergency index or station id
    start: float
    finish: float
    origin: tuple      # point the leg starts from
    hospital: int | None = None


@dataclass(frozen=True)
class Itinerary:
    ambulance: int
    legs: tuple
    served: tuple
    cost: float
    id: int = 0

    @property
    def mask(self) -> int:
        m = 0
        for e in self.served:
            m |= 1 << e
        return m

    @property
    def first(self) -> Leg | None:
        return self.legs[0] if self.legs else None


@dataclass(frozen=True)
class Release:
    """Where and when an ambulance becomes free to follow an itinerary.

    ``kind`` is "free" (at a cell, e.g. after a hospital handoff) or
    "moving" (at ``point`` heading to ``station``, arriving at ``arrive``;
    idle ambulances are moving with arrive <= now).
    """
    kind: str
    time: float
    cell: int = -1
    point: tuple = ()
    station: int = -1
    arrive: float = 0.0


@dataclass
class ItineraryConfig:
    depth_cap: int = 2
    station_cap: int = 3
    emergency_cap: int | None = 4     # branching bound on later-arriving emergencies


class Enumerator:
    def __init__(self, instance: Instance, emergencies: list[Emergency], now: float, horizon: float,
                 config: ItineraryConfig = ItineraryConfig()):
        self.inst = instance
        self.em = emergencies
        self.now = now
        self.end = now + horizon
        self.cfg = config
        geo = instance.geometry
        types = instance.types
        n = len(emergencies)
        self.cells = np.array([e.cell for e in emergencies], dtype=np.int64)
        self.t1 = np.array([e.time for e in emergencies])
        u = np.array([e.uniforms for e in emergencies]).reshape(n, 4)
        self.go_mult = 1.0 - np.log1p(-u[:, 0]) if n else np.zeros(0)
        after, free_cell, hosp = np.zeros(n), np.zeros(n, dtype=np.int64), [None] * n
        for i, e in enumerate(emergencies):
            sev = types.types[e.ctype].severity
            t = sample_scene_time(sev, u[i, 1])
            if types.types[e.ctype].needs_hospital:
                h = instance.nearest_hospital(e.cell)
                hc = int(instance.hospital_cells[h])
                t += sample_travel_time(instance.leg[e.cell, hc], u[i, 2]) + sample_hospital_time(sev, u[i, 3])
                hosp[i], free_cell[i] = h, hc
            else:
                free_cell[i] = e.cell
            after[i] = t
        self.after, self.free_cell, self.hosp = after, free_cell, hosp
        self.theta = types.urgency[[e.ctype for e in emergencies]] if n else np.zeros(0)
        self.mismatch = {cap: types.mismatch_seconds(cap)[[e.ctype for e in emergencies]] if n else np.zeros(0)
                         for cap in types.capabilities}
        self.centers = geo.centers
        self.station_cells = instance.station_cells
        self.reloc_time = sample_travel_time(instance.leg, U_MEAN)   # expected trip between cells

    # -- helpers ------------------------------------------------------------------
    def _serve_from_cell(self, cell, s, e):
        arrive = s + self.inst.leg[cell, self.cells[e]] * self.go_mult[e]
        return arrive, arrive + self.after[e]

    def _serve_from_point(self, p, s, e):
        arrive = s + self.inst.leg_from_point(p, int(self.cells[e])) * self.go_mult[e]
        return arrive, arrive + self.after[e]

    def _prt(self, cap, e, arrive):
        return self.theta[e] * (arrive - self.t1[e]) + self.mismatch[cap][e]

    # -- enumeration ----------------------------------------------------------------
    def enumerate(self, ambulance: int, release: Release, first_station: list[int] | None = None,
                  first_serve: list[int] | None = None, forbid: frozenset = frozenset()) -> list[Itinerary]:
        """All itineraries for one ambulance.

        ``first_station`` / ``first_serve`` override the options of the very
        first leg when the ambulance is released free (reassignment
        candidates); ``forbid`` removes emergencies from consideration.
        """
        out: list[Itinerary] = []

        def emit(legs, served, cost):
            out.append(Itinerary(ambulance, tuple(legs), tuple(served), float(cost), len(out)))

        self._walk(ambulance, release, first_station, first_serve, forbid, emit, True)
        return out

    def options(self, ambulance: int, release: Release, first_station: list[int] | None = None,
                first_serve: list[int] | None = None, forbid: frozenset = frozenset()) -> dict[int, float]:
        """Cheapest cost per served set, without building the legs."""
        best: dict[int, float] = {}

        def emit(legs, served, cost):
            m = 0
            for e in served:
                m |= 1 << e
            if cost < best.get(m, math.inf):
                best[m] = float(cost)

        self._walk(ambulance, release, first_station, first_serve, forbid, emit, False)
        return best

    def _walk(self, ambulance, release, first_station, first_serve, forbid, emit, with_legs):
        cap = self.inst.ambulances[ambulance].capability
        cfg = self.cfg

        def from_free(cell, s, legs, served, cost, first=False):
            if s >= self.end:
                emit(legs, served, cost)
                return
            if first and first_serve is not None:
                cands = first_serve
            elif first and first_station is not None:
                cands = []
            else:
                cands = [e for e in np.flatnonzero(self.t1 <= s).tolist()
                         if e not in served and e not in forbid]
                if cfg.emergency_cap is not None and len(cands) > cfg.emergency_cap:
                    reach = self.inst.leg[cell, self.cells[cands]] * self.go_mult[cands]
                    cands = [cands[i] for i in np.argsort(reach, kind="stable")[:cfg.emergency_cap]]
            if len(served) < cfg.depth_cap:
                for e in cands:
                    arrive, free = self._serve_from_cell(cell, s, e)
                    leg = [Leg("serve", e, s, free, tuple(self.centers[cell]), self.hosp[e])] if with_legs else []
                    from_free(int(self.free_cell[e]), free, legs + leg, served + [e],
                              cost + self._prt(cap, e, arrive))
            if first and first_station is not None:
                stations = first_station
            elif first and first_serve is not None:
                return
            else:
                stations = self.inst.station_rank[cell, :cfg.station_cap].tolist()
            for b in stations:
                bc = int(self.station_cells[b])
                arrive = s if bc == cell else s + self.reloc_time[cell, bc]
                leg = [Leg("station", b, s, arrive, tuple(self.centers[cell]))] if with_legs else []
                toward(tuple(self.centers[cell]), b, s, arrive, legs + leg, served, cost, False)

        def toward(p, b, depart, arrive, legs, served, cost, initial):
            emit(legs, served, cost)
            if len(served) >= cfg.depth_cap:
                return
            lo = self.now if initial else depart
            opts = []
            for e in range(len(self.em)):
                if e in served or e in forbid or self.t1[e] >= self.end:
                    continue
                if not initial and self.t1[e] <= depart:
                    continue
                s = max(lo, self.t1[e])
                if s < arrive:
                    frac = (s - depart) / (arrive - depart) if arrive > depart else 1.0
                    bc = self.centers[self.station_cells[b]]
                    q = (p[0] + frac * (bc[0] - p[0]), p[1] + frac * (bc[1] - p[1]))
                    sc, free = self._serve_from_point(q, s, e)
                else:
                    q = tuple(self.centers[self.station_cells[b]])
                    sc, free = self._serve_from_cell(int(self.station_cells[b]), s, e)
                opts.append((sc, e, s, free, q))
            opts.sort()
            if cfg.emergency_cap is not None:
                # calls already waiting are always offered; later ones are capped
                known = [o for o in opts if self.t1[o[1]] <= lo]
                later = [o for o in opts if self.t1[o[1]] > lo][:cfg.emergency_cap]
                opts = sorted(known + later)
            for sc, e, s, free, q in opts:
                leg = [Leg("serve", e, s, free, q, self.hosp[e])] if with_legs else []
                from_free(int(self.free_cell[e]), free, legs + leg, served + [e],
                          cost + self._prt(cap, e, sc))

        if release.kind == "free":
            from_free(release.cell, max(release.time, self.now), [], [], 0.0, first=True)
        else:
            toward(release.point, release.station, self.now, max(release.arrive, self.now), [], [], 0.0, True)


def itinerary_cost(itin: Itinerary, instance: Instance, emergencies: list[Emergency]) -> float:
    """Recompute the cost from the legs: PRT of each served emergency."""
    cap = instance.ambulances[itin.ambulance].capability
    total = 0.0
    for leg in itin.legs:
        if leg.kind != "serve":
            continue
        e = emergencies[leg.target]
        u = e.uniforms
        arrive = leg.start + sample_travel_time(instance.leg_from_point(leg.origin, e.cell), u[0])
        total += penalized_response_time(instance.types, cap, e.ctype, arrive - e.time)
    return total


# --------------------------------------------------------------------------
# set partitioning


class SetPartitionError(RuntimeError):
    pass


@dataclass
class SetPartitionInstance:
    masks: list            # per ambulance: list of int bitmasks
    costs: list            # per ambulance: list of costs
    penalties: np.ndarray  # per emergency
    fallback: list = field(default_factory=list)   # per ambulance: index of a no-service itinerary

    def check(self):
        for a, (ms, cs) in enumerate(zip(self.masks, self.costs)):
            if not ms:
                raise SetPartitionError(f"ambulance {a} has an empty pool")
            if len(ms) != len(cs):
                raise SetPartitionError("mask/cost length mismatch")
            if not any(m == 0 for m in ms):
                raise SetPartitionError(f"ambulance {a} pool lacks a relocation fallback")


def _net(sp: SetPartitionInstance):
    """Per ambulance: undominated options as (net cost, itinerary index, mask), sorted.

    Net cost is the itinerary cost minus the penalties it saves.  Only the
    cheapest itinerary per served set is kept (lowest id on ties), and an
    option is dropped when a proper subset of its served set is at least as
    cheap: swapping it in never breaks feasibility or raises the cost.
    """
    g = sp.penalties
    saved = {0: 0.0}

    def penalty(m):
        v = saved.get(m)
        if v is None:
            low = m & -m
            v = saved[m] = float(g[low.bit_length() - 1]) + penalty(m ^ low)
        return v

    out = []
    for ms, cs in zip(sp.masks, sp.costs):
        best = {}
        for i, (m, c) in enumerate(zip(ms, cs)):
            if not math.isfinite(c):      # placeholder options can never be chosen
                continue
            r = (c - penalty(m), i, m)
            if m not in best or r < best[m]:
                best[m] = r
        kept = []
        for m, r in best.items():
            sub = (m - 1) & m
            dominated = False
            while True:
                if sub != m and sub in best and best[sub][0] <= r[0]:
                    dominated = True
                    break
                if sub == 0:
                    break
                sub = (sub - 1) & m
            if not dominated:
                kept.append(r)
        if not kept:
            raise SetPartitionError(f"ambulance {len(out)} has no finite-cost itinerary")
        out.append(sorted(kept))
    return out


def _multipliers(pools, n_em: int, upper: float, iters: int = 80) -> np.ndarray:
    """Subgradient ascent on the Lagrangian dual of the at-most-once rows.

    L(mu) = sum_a min_i (r_i + mu . mask_i) - sum_e mu_e is a lower bound on
    the optimum for every mu >= 0; the best mu found is returned.
    """
    if n_em == 0:
        return np.zeros(0)
    r = np.array([x[0] for pool in pools for x in pool])
    bits = np.array([[x[2] >> e & 1 for e in range(n_em)] for pool in pools for x in pool], dtype=float)
    starts = np.cumsum([0] + [len(pool) for pool in pools])[:-1]
    mu = np.zeros(n_em)
    best_mu, best_val = mu.copy(), -np.inf
    step, stall = 1.0, 0
    for _ in range(iters):
        adj = r + bits @ mu
        seg_min = np.minimum.reduceat(adj, starts)
        val = float(seg_min.sum() - mu.sum())
        if val > best_val + 1e-9:
            best_val, best_mu, stall = val, mu.copy(), 0
        else:
            stall += 1
            if stall >= 5:
                step, stall = step / 2, 0
        hit = adj == np.repeat(seg_min, np.diff(np.r_[starts, len(r)]))
        # one argmin per ambulance
        first = np.zeros(len(r), dtype=bool)
        for k, s0 in enumerate(starts):
            e0 = starts[k + 1] if k + 1 < len(starts) else len(r)
            first[s0 + int(np.argmax(hit[s0:e0]))] = True
        grad = bits[first].sum(axis=0) - 1.0
        grad[(mu <= 0) & (grad < 0)] = 0.0
        norm = float(grad @ grad)
        if norm == 0 or upper - val <= 1e-9:
            break
        mu = np.maximum(0.0, mu + step * (upper - val) / norm * grad)
    return best_mu


def _highs_model(net, n_em: int, integer: bool):
    """Set-partition model over the reduced options; columns in pool order."""
    import highspy
    r = np.array([x[0] for pool in net for x in pool])
    owner = np.repeat(np.arange(len(net)), [len(pool) for pool in net])
    masks = [x[2] for pool in net for x in pool]
    na, n = len(net), len(r)
    if n_em <= 62:
        m = np.array(masks, dtype=np.int64)
        bits = ((m[:, None] >> np.arange(n_em)) & 1).astype(bool)
    else:
        bits = np.array([[mk >> e & 1 for e in range(n_em)] for mk in masks], dtype=bool).reshape(n, n_em)
    col, em = np.nonzero(bits)
    rows = np.concatenate([owner, na + em])
    cols = np.concatenate([np.arange(n), col])
    order = np.lexsort((rows, cols))
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    lp = highspy.HighsLp()
    lp.num_col_, lp.num_row_ = n, na + n_em
    lp.col_cost_ = r
    lp.col_lower_, lp.col_upper_ = np.zeros(n), np.ones(n)
    lp.row_lower_ = np.r_[np.ones(na), np.full(n_em, -np.inf)]
    lp.row_upper_ = np.ones(na + n_em)
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = np.searchsorted(cols[order], np.arange(n + 1)).astype(np.int32)
    lp.a_matrix_.index_ = rows[order].astype(np.int32)
    lp.a_matrix_.value_ = np.ones(len(order))
    if integer:
        lp.integrality_ = [highspy.HighsVarType.kInteger] * n
    h.passModel(lp)
    h.run()
    if h.getModelStatus() != highspy.HighsModelStatus.kOptimal:
        return None
    sol = h.getSolution()
    return np.asarray(sol.col_value), np.maximum(0.0, -np.asarray(sol.row_dual)[na:])


def _pick_from(x, net, base):
    chosen, val, k = [0] * len(net), 0.0, 0
    for a, pool in enumerate(net):
        for r, i, m in pool:
            if x[k] > 0.5:
                chosen[a] = i
                val += r
            k += 1
    return chosen, base + val


def _integral(x) -> bool:
    return bool(np.all(np.minimum(np.abs(x), np.abs(1.0 - x)) < 1e-7))


SP_METHODS = ("bb", "lp", "mip")


def solve_set_partition(sp: SetPartitionInstance, node_limit: int = 2_000_000, method: str = "bb"):
    """Exact optimum; returns (chosen index per ambulance, objective).

    ``bb``: depth-first branch and bound over ambulances.  Bounds come from
    a Lagrangian relaxation of the at-most-once rows with multipliers fixed
    at the root (subgradient ascent): every remaining ambulance contributes
    its cheapest compatible option at the adjusted cost, minus the
    multipliers of the emergencies still open.
    ``lp``: solve the LP relaxation first; return it when integral, else run
    the same branch and bound with the LP duals as multipliers.
    ``mip``: LP relaxation first, HiGHS branch and bound when fractional.
    """
    if method not in SP_METHODS:
        raise ValueError(f"method must be one of {SP_METHODS}")
    sp.check()
    net = _net(sp)
    n_em = len(sp.penalties)
    base = float(np.sum(sp.penalties))
    n = len(net)
    mu = None
    if method != "bb" and n:
        relax = _highs_model(net, n_em, integer=False)
        if relax is not None:
            x, mu = relax
            if _integral(x):
                return _pick_from(x, net, base)
            if method == "mip":
                exact = _highs_model(net, n_em, integer=True)
                if exact is None:
                    raise SetPartitionError("integer solve failed")
                return _pick_from(np.round(exact[0]), net, base)

    def greedy(order_key):
        used, val, pick = 0, 0.0, [0] * n
        for a in range(n):
            for r, i, m in sorted(net[a], key=order_key):
                if not m & used:
                    used |= m
                    val += r
                    pick[a] = i
                    break
        return val, pick

    incumbents = [greedy(lambda x: x), greedy(lambda x: (x[2] != 0, x))]
    best_val, best_pick = min(incumbents, key=lambda v: v[0])
    if mu is None:
        mu = _multipliers(net, n_em, best_val)
    # options with adjusted cost, sorted by it
    adj = []
    for pool in net:
        rows = [(r + sum(mu[e] for e in range(n_em) if m >> e & 1), r, i, m) for r, i, m in pool]
        adj.append(sorted(rows))
    order = sorted(range(n), key=lambda a: (adj[a][0][0] - adj[a][-1][0], a))
    pools = [adj[a] for a in order]
    mu_total = float(mu.sum())
    state = {"val": best_val, "pick": [best_pick[a] for a in order], "nodes": 0}
    pick = [0] * n

    def lower(k, used):
        s = mu_total - sum(mu[e] for e in range(n_em) if used >> e & 1)
        total = -s
        for pool in pools[k:]:
            for ra, _, _, m in pool:
                if not m & used:
                    total += ra
                    break
        return total

    def dfs(k, used, val):
        state["nodes"] += 1
        if state["nodes"] > node_limit:
            raise SetPartitionError("node limit exceeded")
        if k == n:
            if val < state["val"] - 1e-9:
                state["val"], state["pick"] = val, list(pick)
            return
        for _, r, i, m in pools[k]:
            if m & used:
                continue
            if val + r + lower(k + 1, used | m) >= state["val"] - 1e-9:
                continue
            pick[k] = i
            dfs(k + 1, used | m, val + r)

    if n and lower(0, 0) < state["val"] - 1e-9:
        dfs(0, 0, 0.0)
    chosen = [0] * n
    for k, a in enumerate(order):
        chosen[a] = state["pick"][k]
    return chosen, base + state["val"]


def set_partition_objective(sp: SetPartitionInstance, chosen) -> float:
    used = 0
    total = 0.0
    for a, i in enumerate(chosen):
        m = sp.masks[a][i]
        if m & used:
            raise SetPartitionError("emergency served twice")
        used |= m
        total += sp.costs[a][i]
    for e, g in enumerate(sp.penalties):
        if not used >> e & 1:
            total += g
    return total


def dump_pools(pools: dict) -> str:
    out = io.StringIO()
    for a in sorted(pools):
        out.write(f"ambulance {a}: {len(pools[a])} itineraries\n")
        for it in pools[a]:
            legs = " ".join(f"{l.kind}:{l.target}@{l.start:.1f}-{l.finish:.1f}" for l in it.legs)
            out.write(f"  [{it.id}] cost={it.cost:.3f} served={list(it.served)} {legs}\n")
    return out.getvalue()
