"""Time-expanded arc model of the second stage.

Time runs over periods t = 1..T (t = 0 is the decision instant).  State
variables track ambulances idle at a station, ambulances travelling towards
a station (an intermediate cell per period), and calls waiting per (type,
cell).  Dispatch variables move an ambulance from a station, an intermediate
cell or a hospital node to a call and deliver it to a hospital node τ
periods later; relocation variables move it from a hospital node towards a
station.

Only states reachable from the post-decision state are instantiated; every
omitted variable would be zero in any feasible solution, so the LP optimum
is unchanged.  Rows are written as ``lhs - rhs`` with dispatches entering
with +1, which makes the negated row duals line up with the pricing
formulas in :mod:`ambdispatch.colgen`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .core import Instance, en_route_position
from .laws import expected_hospital_time, expected_scene_time
from .lp import LinearProgram, LpSolution, solve as simplex_solve
from .lp.model import INFEASIBLE, OPTIMAL, UNBOUNDED

# column families
XS, XE, XH, Y, S, E, Q = range(7)
FAMILY_NAMES = ("x_station", "x_enroute", "x_hospital", "y", "A_station", "A_enroute", "C")
# row families
R_STATION, R_HOSP, R_ENROUTE, R_QUEUE, R_CAP, R_SUP_S, R_SUP_E, R_BOUND = range(8)
ROW_NAMES = ("At1", "At2", "At3", "At4", "At5", "At6", "At7", "At8")


class ArcModelError(RuntimeError):
    pass


@dataclass(frozen=True)
class ArcConfig:
    period: float = 1800.0
    horizon: int = 4              # periods
    reloc_choices: int = 3        # nearest stations offered from a hospital node, plus home
    m_limit: int = 5


class ArcData:
    """Static tables for one instance and configuration."""

    def __init__(self, instance: Instance, config: ArcConfig = ArcConfig()):
        self.instance = instance
        self.config = config
        ty = instance.types
        self.n_types = len(ty)
        self.theta = ty.urgency
        self.needs = ty.needs_hospital
        self.exp_scene = np.array([expected_scene_time(s) for s in ty.severity])
        self.exp_hosp = np.array([expected_hospital_time(s) for s in ty.severity])
        self.mismatch = {cap: ty.mismatch_seconds(cap) for cap in ty.capabilities}
        self.go = 2.0 * instance.leg                         # expected travel, cell x cell
        self.station_cell = instance.station_cells
        self._L: dict = {}

    def next_cell(self, cell: int, station: int) -> int:
        key = (cell, station)
        out = self._L.get(key)
        if out is None:
            out = en_route_position(self.instance.geometry, cell, int(self.station_cell[station]),
                                    self.config.period)
            self._L[key] = out
        return out

    def hospital_node(self, ctype: int, cell: int, hospital) -> int:
        return cell if hospital is None else int(self.instance.hospital_cells[hospital])

    def periods(self, seconds):
        return np.maximum(1, np.ceil(np.asarray(seconds) / self.config.period - 1e-9)).astype(np.int64)

    def duration(self, origin, c, l, h):
        """Expected seconds from dispatch at ``origin`` until free at hospital node ``h``."""
        rest = self.exp_scene[c] + np.where(self.needs[c], self.go[l, h] + self.exp_hosp[c], 0.0)
        return self.go[origin, l] + rest

    def tau(self, origin, c, l, h):
        return self.periods(self.duration(origin, c, l, h))

    def dispatch_cost(self, capability: str, origin, c, l):
        return self.theta[c] * self.go[origin, l] + self.mismatch[capability][c]

    def queue_cost(self, c):
        return self.instance.costs.queue_weight * self.theta[c] * self.config.period

    @cached_property
    def demand_hospitals(self) -> np.ndarray:
        """(types, cells, k) hospital-node cells offered for each call class."""
        inst = self.instance
        k = inst.hospital_choices
        out = np.zeros((self.n_types, inst.geometry.n_cells, k), dtype=np.int64)
        cells = np.arange(inst.geometry.n_cells)
        ranked = inst.hospital_cells[inst.hospital_rank[:, :k]]
        for c in range(self.n_types):
            out[c] = ranked if self.needs[c] else cells[:, None]
        return out

    def reloc_options(self, ambulance: int, node_cell: int) -> list[int]:
        inst = self.instance
        near = [int(b) for b in inst.station_rank[node_cell, :self.config.reloc_choices]]
        home = inst.ambulances[ambulance].home
        return sorted(set(near) | {home})


# --------------------------------------------------------------------------
# initial and post-decision conditions


@dataclass
class PostDecision:
    """Fleet and queue at period 1, after the first-stage decision took effect."""
    at_station: dict = field(default_factory=dict)      # a -> station
    en_route: dict = field(default_factory=dict)        # a -> (cell, station)
    arrivals: list = field(default_factory=list)        # (a, node cell, period)
    queue: dict = field(default_factory=dict)           # (type, cell) -> count

    def validate(self, n_amb: int, horizon: int):
        seen = list(self.at_station) + list(self.en_route)
        seen += [a for a, _, _ in self.arrivals]
        if len(seen) != len(set(seen)):
            raise ArcModelError("an ambulance appears in two places")
        if any(not 0 <= a < n_amb for a in seen):
            raise ArcModelError("unknown ambulance")
        if any(not 1 <= t <= horizon for _, _, t in self.arrivals):
            raise ArcModelError("arrival outside the horizon")
        if any(v < 0 for v in self.queue.values()):
            raise ArcModelError("negative queue")


@dataclass
class InitialConditions:
    """Decision-time snapshot mapped onto the arc model's index sets."""
    at_station: dict
    en_route: dict          # a -> (cell, station): snapped position, destination
    busy: list              # (a, node cell, seconds until free)
    queue: dict             # (type, cell) -> count
    oldest: dict            # (type, cell) -> oldest queued call id
    new_call: object = None
    freed: tuple | None = None     # (ambulance, node cell)


def initial_conditions(state, call=None, freed: int | None = None) -> InitialConditions:
    from .sim import JOB, TRIP
    inst = state.instance
    at_station, en_route, busy = {}, {}, []
    for u in state.units:
        if u.id == freed:
            continue
        if u.mode == JOB:
            busy.append((u.id, int(u.free_cell), u.free_at - state.clock))
        elif u.mode == TRIP and u.eta > state.clock:
            cell = state.cell(u.id)
            if cell == inst.stations[u.station].cell:
                at_station[u.id] = u.station
            else:
                en_route[u.id] = (cell, u.station)
        else:
            at_station[u.id] = u.station
    queue, oldest = {}, {}
    for q in state.queue:
        key = (q.ctype, q.cell)
        queue[key] = queue.get(key, 0) + 1
        oldest.setdefault(key, q.id)
    fr = None
    if freed is not None:
        fr = (freed, int(state.units[freed].free_cell))
    return InitialConditions(at_station, en_route, busy, queue, oldest, call, fr)


def post_decision(data: ArcData, init: InitialConditions, cand, state) -> tuple[PostDecision, float]:
    """Apply a first-stage candidate; return the period-1 state and first-stage cost."""
    from .sim import DispatchEnRoute, DispatchIdle, Enqueue, Relocate, ServeFromQueue
    T = data.config.horizon
    post = PostDecision(queue=dict(init.queue))
    cost = 0.0
    moved = getattr(cand, "ambulance", None)
    for a, b in init.at_station.items():
        if a != moved:
            post.at_station[a] = b
    for a, (cell, b) in init.en_route.items():
        if a == moved:
            continue
        nxt = data.next_cell(cell, b)
        if nxt == data.station_cell[b]:
            post.at_station[a] = b
        else:
            post.en_route[a] = (nxt, b)
    for a, node, remaining in init.busy:
        t = int(data.periods(remaining))
        if t <= T:
            post.arrivals.append((a, node, t))

    def send(a, origin, call_type, call_cell, hospital):
        node = data.hospital_node(call_type, call_cell, hospital)
        t = int(data.tau(origin, call_type, call_cell, node))
        if t <= T:
            post.arrivals.append((a, node, t))
        cap = data.instance.ambulances[a].capability
        return float(data.dispatch_cost(cap, origin, call_type, call_cell))

    if isinstance(cand, (DispatchIdle, DispatchEnRoute)):
        a = cand.ambulance
        # an en-route ambulance may already snap to its station's cell
        if a in init.en_route:
            origin = init.en_route[a][0]
        else:
            origin = int(data.station_cell[init.at_station[a]])
        call = init.new_call
        cost = send(cand.ambulance, origin, call.ctype, call.cell, cand.hospital)
    elif isinstance(cand, Enqueue):
        call = init.new_call
        key = (call.ctype, call.cell)
        post.queue[key] = post.queue.get(key, 0) + 1
    elif isinstance(cand, ServeFromQueue):
        call = state.queued(cand.call)
        key = (call.ctype, call.cell)
        post.queue[key] -= 1
        if post.queue[key] == 0:
            del post.queue[key]
        cost = send(cand.ambulance, init.freed[1], call.ctype, call.cell, cand.hospital)
    elif isinstance(cand, Relocate):
        a, node = init.freed
        nxt = data.next_cell(node, cand.station)
        if nxt == data.station_cell[cand.station]:
            post.at_station[a] = cand.station
        else:
            post.en_route[a] = (nxt, cand.station)
        cost = data.instance.costs.relocation_cost
    else:
        raise ArcModelError(f"unknown candidate {cand!r}")
    return post, cost


# --------------------------------------------------------------------------
# LP construction


class ArcIndex:
    """Column and row metadata with lazy key <-> id maps."""

    def __init__(self, cols: dict, row_keys: list):
        self.cols = cols            # family-aligned numpy arrays
        self.row_keys = row_keys    # tuples (family, ...)

    @property
    def n_cols(self):
        return len(self.cols["fam"])

    def col_key(self, j: int) -> tuple:
        c = self.cols
        f = int(c["fam"][j])
        t, a = int(c["t"][j]), int(c["a"][j])
        if f == XS:
            return (f, t, int(c["c"][j]), a, int(c["b"][j]), int(c["l"][j]), int(c["h"][j]))
        if f == XE:
            return (f, t, int(c["c"][j]), a, int(c["org"][j]), int(c["b"][j]), int(c["l"][j]), int(c["h"][j]))
        if f == XH:
            return (f, t, int(c["c"][j]), a, int(c["org"][j]), int(c["l"][j]), int(c["h"][j]))
        if f == Y:
            return (f, t, a, int(c["org"][j]), int(c["b"][j]))
        if f == S:
            return (f, t, a, int(c["b"][j]))
        if f == E:
            return (f, t, a, int(c["org"][j]), int(c["b"][j]))
        return (f, t, int(c["c"][j]), int(c["l"][j]))

    @cached_property
    def col_ids(self) -> dict:
        return {self.col_key(j): j for j in range(self.n_cols)}

    @cached_property
    def row_ids(self) -> dict:
        return {k: i for i, k in enumerate(self.row_keys)}

    def col_name(self, j):
        k = self.col_key(j)
        return FAMILY_NAMES[k[0]] + "(" + ",".join(map(str, k[1:])) + ")"

    def row_name(self, i):
        k = self.row_keys[i]
        return ROW_NAMES[k[0]] + "(" + ",".join(map(str, k[1:])) + ")"


@dataclass
class ArcProblem:
    lp: LinearProgram
    index: ArcIndex
    rhs: list                 # one rhs vector per post-decision variant
    offsets: list             # constant objective term per variant
    feasible: list            # False when a variant violates period-1 capacity
    data: ArcData
    demand: np.ndarray        # (T, types, cells) counts

    def variant(self, k: int) -> LinearProgram:
        lp = self.lp.with_rhs(self.rhs[k])
        lp.offset = self.offsets[k]
        return lp


def build_second_stage(data: ArcData, posts: list[PostDecision], demand: np.ndarray) -> ArcProblem:
    """One LP structure covering every post-decision variant; variants differ in rhs only."""
    inst, cfg = data.instance, data.config
    T = cfg.horizon
    nA = len(inst.ambulances)
    for p in posts:
        p.validate(nA, T)
    if demand.shape[0] != T:
        raise ArcModelError("demand must have one slice per period")

    # calls that can be waiting at period t: queued initially or arrived by t
    initial_q = np.zeros(demand.shape[1:], dtype=bool)
    for p in posts:
        for (c, l), v in p.queue.items():
            if v > 0:
                initial_q[c, l] = True
    active = np.logical_or.accumulate(np.concatenate([initial_q[None], demand > 0]), axis=0)[1:]
    dem = []           # per t: (c, l, h) triples
    for t in range(T):
        cc, ll = np.nonzero(active[t])
        hh = data.demand_hospitals[cc, ll]           # (n, k)
        k = hh.shape[1]
        dem.append((np.repeat(cc, k), np.repeat(ll, k), hh.ravel()))

    # -- reachability, per ambulance ------------------------------------------
    S_set = [[set() for _ in range(T + 2)] for _ in range(nA)]
    E_set = [[set() for _ in range(T + 2)] for _ in range(nA)]
    H_set = [[set() for _ in range(T + 2)] for _ in range(nA)]
    for p in posts:
        for a, b in p.at_station.items():
            S_set[a][1].add(b)
        for a, (cell, b) in p.en_route.items():
            E_set[a][1].add((cell, b))
        for a, node, t in p.arrivals:
            H_set[a][t].add(node)

    chunks = []      # (fam, a, t, org, b, idx into dem[t], tau)
    ys = []          # (a, t, node, b)
    for a in range(nA):
        cap = inst.ambulances[a].capability
        for t in range(1, T + 1):
            dc, dl, dh = dem[t - 1]

            def expand(fam, origin_cell, org, b):
                if not len(dc):
                    return
                tau = data.tau(origin_cell, dc, dl, dh)
                chunks.append((fam, a, t, org, b, tau))
                arr = t + tau
                ok = arr <= T
                for tt, hn in set(zip(arr[ok].tolist(), dh[ok].tolist())):
                    H_set[a][tt].add(hn)

            for b in sorted(S_set[a][t]):
                S_set[a][t + 1].add(b)
                expand(XS, int(data.station_cell[b]), b, b)
            for cell, b in sorted(E_set[a][t]):
                nxt = data.next_cell(cell, b)
                if nxt == data.station_cell[b]:
                    S_set[a][t + 1].add(b)
                else:
                    E_set[a][t + 1].add((nxt, b))
                expand(XE, cell, cell, b)
            for node in sorted(H_set[a][t]):
                for b in data.reloc_options(a, node):
                    ys.append((a, t, node, b))
                    nxt = data.next_cell(node, b)
                    if nxt == data.station_cell[b]:
                        S_set[a][t + 1].add(b)
                    else:
                        E_set[a][t + 1].add((nxt, b))
                expand(XH, node, node, -1)

    # -- rows -------------------------------------------------------------------
    row_keys = []
    rid = {}

    def row(key):
        i = rid.get(key)
        if i is None:
            i = rid[key] = len(row_keys)
            row_keys.append(key)
        return i

    for a in range(nA):
        for t in range(1, T + 1):
            for b in sorted(S_set[a][t + 1]):
                row((R_STATION, t, a, b))
            for cell, b in sorted(E_set[a][t + 1]):
                row((R_ENROUTE, t, a, b, cell))
            for node in sorted(H_set[a][t]):
                row((R_HOSP, t, a, node))
    for t in range(1, T + 1):
        cc, ll = np.nonzero(active[t - 1])
        for c, l in zip(cc.tolist(), ll.tolist()):
            row((R_QUEUE, t, c, l))
    for t in range(2, T + 2):
        for b in sorted({b for a in range(nA) for b in S_set[a][t]}):
            row((R_CAP, t, b))
    has_x = {(ch[1], ch[2], ch[0], ch[3], ch[4]) for ch in chunks}
    for a in range(nA):
        for t in range(1, T + 1):
            for b in sorted(S_set[a][t]):
                if (a, t, XS, b, b) in has_x:
                    row((R_SUP_S, t, a, b))
            for cell, b in sorted(E_set[a][t]):
                if (a, t, XE, cell, b) in has_x:
                    row((R_SUP_E, t, a, b, cell))
    for t in range(1, T + 1):
        cc, ll = np.nonzero(active[t - 1])
        for c, l in zip(cc.tolist(), ll.tolist()):
            row((R_BOUND, t, c, l))
    m = len(row_keys)

    def successor(t, a, cell, b):
        """Row receiving an ambulance that sits at ``cell`` heading to ``b`` at period t+1."""
        nxt = data.next_cell(cell, b)
        if nxt == data.station_cell[b]:
            return rid[(R_STATION, t, a, b)]
        return rid[(R_ENROUTE, t, a, b, nxt)]

    # -- columns ------------------------------------------------------------------
    meta = {k: [] for k in ("fam", "t", "a", "org", "b", "c", "l", "h", "tau")}
    costs, rows_l, cols_l, vals_l = [], [], [], []
    ncol = 0

    def add_scalar(fam, t, a, org, b, c, l, h, cost, entries):
        nonlocal ncol
        for k, v in zip(("fam", "t", "a", "org", "b", "c", "l", "h", "tau"), (fam, t, a, org, b, c, l, h, 0)):
            meta[k].append(np.array([v]))
        costs.append(np.array([cost]))
        for r, v in entries:
            rows_l.append(np.array([r]))
            cols_l.append(np.array([ncol]))
            vals_l.append(np.array([v], dtype=float))
        ncol += 1

    # dispatch columns, vectorized per chunk
    qrow = {}
    brow = {}
    for t in range(1, T + 1):
        dc, dl, dh = dem[t - 1]
        qrow[t] = np.array([rid[(R_QUEUE, t, c, l)] for c, l in zip(dc.tolist(), dl.tolist())], dtype=np.int64)
        brow[t] = np.array([rid[(R_BOUND, t, c, l)] for c, l in zip(dc.tolist(), dl.tolist())], dtype=np.int64)
    arr_row = np.full((nA, T + 2, inst.geometry.n_cells), -1, dtype=np.int64)
    for key, i in rid.items():
        if key[0] == R_HOSP:
            arr_row[key[2], key[1], key[3]] = i

    for fam, a, t, org, b, tau in chunks:
        dc, dl, dh = dem[t - 1]
        n = len(dc)
        cap = inst.ambulances[a].capability
        if fam == XS:
            origin_cell = int(data.station_cell[b])
            src = rid[(R_STATION, t, a, b)]
            sup = rid[(R_SUP_S, t, a, b)]
        elif fam == XE:
            origin_cell = org
            src = successor(t, a, org, b)
            sup = rid[(R_SUP_E, t, a, b, org)]
        else:
            origin_cell = org
            src = rid[(R_HOSP, t, a, org)]
            sup = -1
        cost = data.dispatch_cost(cap, origin_cell, dc, dl)
        j = np.arange(ncol, ncol + n)
        arrival_t = t + tau
        arr = np.where(arrival_t <= T, arr_row[a, np.minimum(arrival_t, T + 1), dh], -1)
        parts = [(np.full(n, src), 1.0), (qrow[t], 1.0), (brow[t], 1.0)]
        if sup >= 0:
            parts.append((np.full(n, sup), 1.0))
        for r, v in parts:
            rows_l.append(r)
            cols_l.append(j)
            vals_l.append(np.full(n, v))
        ok = arr >= 0
        rows_l.append(arr[ok])
        cols_l.append(j[ok])
        vals_l.append(np.full(int(ok.sum()), -1.0))
        for k, v in (("fam", fam), ("t", t), ("a", a), ("org", org), ("b", b)):
            meta[k].append(np.full(n, v))
        meta["c"].append(dc)
        meta["l"].append(dl)
        meta["h"].append(dh)
        meta["tau"].append(tau)
        costs.append(cost)
        ncol += n

    reloc = inst.costs.relocation_cost
    for a, t, node, b in ys:
        add_scalar(Y, t, a, node, b, -1, -1, -1, reloc,
                   [(rid[(R_HOSP, t, a, node)], 1.0), (successor(t, a, node, b), -1.0)])

    st_cost, er_cost = inst.costs.station_cost, inst.costs.enroute_cost
    for a in range(nA):
        for t in range(2, T + 2):
            for b in sorted(S_set[a][t]):
                ent = [(rid[(R_STATION, t - 1, a, b)], 1.0), (rid[(R_CAP, t, b)], 1.0)]
                if t <= T:
                    ent.append((rid[(R_STATION, t, a, b)], -1.0))
                    if (R_SUP_S, t, a, b) in rid:
                        ent.append((rid[(R_SUP_S, t, a, b)], -1.0))
                add_scalar(S, t, a, -1, b, -1, -1, -1, st_cost, ent)
            for cell, b in sorted(E_set[a][t]):
                ent = [(rid[(R_ENROUTE, t - 1, a, b, cell)], 1.0)]
                if t <= T:
                    ent.append((successor(t, a, cell, b), -1.0))
                    if (R_SUP_E, t, a, b, cell) in rid:
                        ent.append((rid[(R_SUP_E, t, a, b, cell)], -1.0))
                add_scalar(E, t, a, cell, b, -1, -1, -1, er_cost, ent)
    for t in range(2, T + 2):
        cc, ll = np.nonzero(active[t - 2])
        for c, l in zip(cc.tolist(), ll.tolist()):
            ent = [(rid[(R_QUEUE, t - 1, c, l)], 1.0)]
            if t <= T:
                ent += [(rid[(R_QUEUE, t, c, l)], -1.0), (rid[(R_BOUND, t, c, l)], -1.0)]
            add_scalar(Q, t, -1, -1, -1, c, l, -1, data.queue_cost(c), ent)

    cols = {k: np.concatenate(v) if v else np.zeros(0, dtype=np.int64) for k, v in meta.items()}
    for k in cols:
        cols[k] = cols[k].astype(np.int64)
    is_eq = np.array([k[0] in (R_STATION, R_HOSP, R_ENROUTE, R_QUEUE) for k in row_keys], dtype=bool)
    lp = LinearProgram.from_triplets(np.concatenate(costs) if costs else np.zeros(0),
                                     np.concatenate(rows_l) if rows_l else [],
                                     np.concatenate(cols_l) if cols_l else [],
                                     np.concatenate(vals_l) if vals_l else [],
                                     np.zeros(m), is_eq)
    index = ArcIndex(cols, row_keys)

    # -- right-hand sides per variant ------------------------------------------------
    base = np.zeros(m)
    for key, i in rid.items():
        f = key[0]
        if f == R_CAP:
            base[i] = inst.stations[key[2]].capacity
        elif f in (R_QUEUE, R_BOUND):
            base[i] += demand[key[1] - 1, key[2], key[3]]
    rhs_list, offsets, feasible = [], [], []
    for p in posts:
        rhs = base.copy()
        load = np.zeros(len(inst.stations), dtype=np.int64)
        for a, b in p.at_station.items():
            rhs[rid[(R_STATION, 1, a, b)]] += 1
            if (R_SUP_S, 1, a, b) in rid:
                rhs[rid[(R_SUP_S, 1, a, b)]] += 1
            load[b] += 1
        for a, (cell, b) in p.en_route.items():
            rhs[successor(1, a, cell, b)] += 1
            if (R_SUP_E, 1, a, b, cell) in rid:
                rhs[rid[(R_SUP_E, 1, a, b, cell)]] += 1
        for a, node, t in p.arrivals:
            rhs[rid[(R_HOSP, t, a, node)]] += 1
        offset = 0.0
        for (c, l), v in p.queue.items():
            if v:
                rhs[rid[(R_QUEUE, 1, c, l)]] += v
                rhs[rid[(R_BOUND, 1, c, l)]] += v
                offset += v * data.queue_cost(c)
        offset += st_cost * len(p.at_station) + er_cost * len(p.en_route)
        rhs_list.append(rhs)
        offsets.append(offset)
        feasible.append(bool(np.all(load <= inst.capacities)))
    return ArcProblem(lp, index, rhs_list, offsets, feasible, data, demand)


def solve_variants(problem: ArcProblem, engine: str = "highs") -> list[float]:
    """Optimal second-stage value for every variant (inf when infeasible)."""
    values = []
    model = None
    if engine == "highs":
        from .lp.highs import HighsModel
        model = HighsModel(problem.lp)
    for k, rhs in enumerate(problem.rhs):
        if not problem.feasible[k]:
            values.append(math.inf)
            continue
        if model is not None:
            model.set_rhs(rhs)
            sol = model.solve(want_duals=False)
        else:
            sol = simplex_solve(problem.lp.with_rhs(rhs))
        if sol.status == UNBOUNDED:
            raise ArcModelError("second-stage LP unbounded")
        if sol.status == INFEASIBLE:
            values.append(math.inf)
        elif sol.status != OPTIMAL:
            raise ArcModelError(f"second-stage LP failed: {sol.status} {sol.message}")
        else:
            values.append(sol.objective + problem.offsets[k])
    return values


def solve_full(problem: ArcProblem, k: int = 0, engine: str = "simplex") -> LpSolution:
    lp = problem.variant(k)
    if engine == "highs":
        from .lp.highs import solve_highs
        return solve_highs(lp)
    return simplex_solve(lp)
