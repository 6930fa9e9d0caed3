"""Continuous-time discrete-event simulation of an ambulance fleet.

Every call arrival asks the policy for a selection decision and every
service completion asks for a reassignment decision.  Travel and service
durations are fixed at dispatch time from pre-drawn uniforms, so the only
scheduled events are arrivals and completions; intermediate statuses are
derived from the clock.
"""
from __future__ import annotations

import heapq
import time as _time
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .core import Call, Instance, penalized_response_time
from .laws import (U_MEAN, sample_hospital_time, sample_scene_time,
                   sample_travel_time)
from .scenarios import RateModel, sample_calls

# --------------------------------------------------------------------------
# statuses (as reported to callers)


@dataclass(frozen=True)
class AtStation:
    station: int


@dataclass(frozen=True)
class EnRouteToStation:
    station: int
    position: tuple
    eta: float


@dataclass(frozen=True)
class EnRouteToScene:
    call: int
    eta: float


@dataclass(frozen=True)
class OnScene:
    call: int
    done_at: float


@dataclass(frozen=True)
class TransportingToHospital:
    call: int
    hospital: int
    eta: float


@dataclass(frozen=True)
class AtHospitalHandoff:
    call: int
    hospital: int | None
    free_at: float


# --------------------------------------------------------------------------
# decisions


@dataclass(frozen=True)
class DispatchIdle:
    ambulance: int
    call: int
    hospital: int | None


@dataclass(frozen=True)
class DispatchEnRoute:
    ambulance: int
    call: int
    hospital: int | None


@dataclass(frozen=True)
class Enqueue:
    call: int


@dataclass(frozen=True)
class ServeFromQueue:
    ambulance: int
    call: int
    hospital: int | None


@dataclass(frozen=True)
class Relocate:
    ambulance: int
    station: int


class InfeasibleDecision(RuntimeError):
    def __init__(self, decision, reason, clock=None):
        super().__init__(f"{decision!r} rejected at t={clock}: {reason}")
        self.decision = decision
        self.reason = reason
        self.clock = clock


class Policy(Protocol):
    name: str

    def select(self, state: "SystemState", call: Call): ...

    def reassign(self, state: "SystemState", ambulance: int): ...


# --------------------------------------------------------------------------
# state

STATION, TRIP, JOB = 0, 1, 2


class Unit:
    """Mutable per-ambulance record."""
    __slots__ = ("id", "capability", "home", "mode", "station", "origin", "depart", "eta",
                 "call", "hospital", "t_scene", "t_scene_done", "t_hosp", "free_at", "free_cell")

    def __init__(self, id, capability, home):
        self.id, self.capability, self.home = id, capability, home
        self.mode, self.station = STATION, home
        self.origin, self.depart, self.eta = None, 0.0, 0.0
        self.call, self.hospital = None, None
        self.t_scene = self.t_scene_done = self.t_hosp = self.free_at = 0.0
        self.free_cell = -1

    def copy(self):
        u = Unit.__new__(Unit)
        for k in Unit.__slots__:
            setattr(u, k, getattr(self, k))
        return u


class SystemState:
    def __init__(self, instance: Instance, clock: float = 0.0):
        self.instance = instance
        self.clock = clock
        self.units = [Unit(a.id, a.capability, a.home) for a in instance.ambulances]
        self.queue: list[Call] = []
        self.load = np.zeros(len(instance.stations), dtype=np.int64)
        for a in instance.ambulances:
            self.load[a.home] += 1
        self.calls: dict[int, Call] = {}
        self.seed = 0

    def clone(self) -> "SystemState":
        s = SystemState.__new__(SystemState)
        s.instance, s.clock, s.seed = self.instance, self.clock, self.seed
        s.units = [u.copy() for u in self.units]
        s.queue = list(self.queue)
        s.load = self.load.copy()
        s.calls = dict(self.calls)
        return s

    # -- queries used by policies -------------------------------------------
    def is_available(self, a: int) -> bool:
        return self.units[a].mode != JOB

    def available(self) -> list[int]:
        return [u.id for u in self.units if u.mode != JOB]

    def is_en_route(self, a: int) -> bool:
        u = self.units[a]
        return u.mode == TRIP and u.eta > self.clock

    def position(self, a: int):
        u = self.units[a]
        geo = self.instance.geometry
        if u.mode == STATION or (u.mode == TRIP and u.eta <= self.clock):
            return geo.centers[self.instance.stations[u.station].cell]
        if u.mode == TRIP:
            dest = geo.centers[self.instance.stations[u.station].cell]
            frac = (self.clock - u.depart) / (u.eta - u.depart)
            return u.origin + frac * (dest - u.origin)
        return geo.centers[u.free_cell]

    def cell(self, a: int) -> int:
        u = self.units[a]
        if u.mode == STATION or (u.mode == TRIP and u.eta <= self.clock):
            return int(self.instance.stations[u.station].cell)
        if u.mode == JOB:
            return int(u.free_cell)
        return self.instance.geometry.nearest_cell(self.position(a))

    def status(self, a: int):
        u, t = self.units[a], self.clock
        if u.mode == STATION or (u.mode == TRIP and u.eta <= t):
            return AtStation(u.station)
        if u.mode == TRIP:
            return EnRouteToStation(u.station, tuple(self.position(a)), u.eta)
        if t < u.t_scene:
            return EnRouteToScene(u.call, u.t_scene)
        if t < u.t_scene_done:
            return OnScene(u.call, u.t_scene_done)
        if u.hospital is not None and t < u.t_hosp:
            return TransportingToHospital(u.call, u.hospital, u.t_hosp)
        return AtHospitalHandoff(u.call, u.hospital, u.free_at)

    def spare(self, b: int) -> int:
        return int(self.instance.stations[b].capacity - self.load[b])

    def queued(self, call_id: int) -> Call | None:
        for c in self.queue:
            if c.id == call_id:
                return c
        return None


# --------------------------------------------------------------------------
# metrics


@dataclass
class ReplicationMetrics:
    waits: list = field(default_factory=list)
    prts: list = field(default_factory=list)
    types: list = field(default_factory=list)
    capabilities: list = field(default_factory=list)
    latencies: list = field(default_factory=list)
    latency_kinds: list = field(default_factory=list)
    arrivals: int = 0
    queued_at_end: int = 0
    in_service_at_end: int = 0
    served_at_end: int = 0
    events: int = 0

    @property
    def mean_rt(self) -> float:
        return float(np.mean(self.waits)) if self.waits else 0.0

    @property
    def mean_prt(self) -> float:
        return float(np.mean(self.prts)) if self.prts else 0.0

    @property
    def mean_latency(self) -> float:
        return float(np.mean(self.latencies)) if self.latencies else 0.0

    def as_tuple(self):
        return (tuple(self.waits), tuple(self.prts), tuple(self.types), tuple(self.capabilities),
                self.arrivals, self.queued_at_end, self.in_service_at_end, self.served_at_end, self.events)


# --------------------------------------------------------------------------
# engine


class Simulator:
    """Event loop over a fixed call list.

    ``draws`` maps call id to its four leg uniforms.  ``reloc_draw(a)``
    returns the uniform for ambulance ``a``'s next relocation trip.
    ``counted(call)`` selects the calls that enter the metrics; ``stop_at``
    truncates the run (used by rollout replays) instead of draining.
    Busy ambulances in ``skip`` get no completion event (a replay that starts
    from a reassignment applies the freed ambulance's decision by hand).
    """

    def __init__(self, instance: Instance, policy, calls: list[Call], draws: dict,
                 reloc_draw: Callable[[int], float] | None = None, state: SystemState | None = None,
                 counted: Callable[[Call], bool] | None = None, stop_at: float | None = None,
                 log: Callable[[str], None] | None = None, time_decisions: bool = True,
                 check: bool = False, skip: frozenset = frozenset()):
        self.instance = instance
        self.policy = policy
        self.calls = calls
        self.draws = draws
        self.reloc_draw = reloc_draw or (lambda a: U_MEAN)
        self.state = state or SystemState(instance)
        self.counted = counted or (lambda c: True)
        self.stop_at = stop_at
        self.log = log
        self.time_decisions = time_decisions
        self.check = check
        self.metrics = ReplicationMetrics()
        self.heap: list = []
        self.seq = 0
        self.call_times = {c.time for c in calls}
        self.penalty_cost = 0.0    # accumulated PRT of dispatches (used by replays)
        self.dispatched: dict[int, tuple[float, float]] = {}
        for u in self.state.units:
            if u.mode == JOB and u.id not in skip:
                self._push(u.free_at, u.id)

    # -- event plumbing ------------------------------------------------------
    def _push(self, t, a):
        while t in self.call_times:
            t += 1e-3
        self.state.units[a].free_at = t
        heapq.heappush(self.heap, (t, self.seq, a))
        self.seq += 1

    def _decide(self, fn, arg, kind):
        if self.time_decisions:
            t0 = _time.perf_counter()
            d = fn(self.state, arg)
            self.metrics.latencies.append(_time.perf_counter() - t0)
            self.metrics.latency_kinds.append(kind)
            return d
        return fn(self.state, arg)

    def run(self) -> ReplicationMetrics:
        st = self.state
        i, n = 0, len(self.calls)
        while True:
            t_arr = self.calls[i].time if i < n else np.inf
            t_done = self.heap[0][0] if self.heap else np.inf
            t = min(t_arr, t_done)
            if t == np.inf or (self.stop_at is not None and t >= self.stop_at):
                break
            st.clock = t
            self.metrics.events += 1
            if t_done <= t_arr:
                _, _, a = heapq.heappop(self.heap)
                if self.log:
                    self.log(f"{t:.3f} complete amb={a}")
                dec = self._decide(self.policy.reassign, a, "reassign")
                self.apply(dec, freed=a)
            else:
                call = self.calls[i]
                i += 1
                st.calls[call.id] = call
                if self.counted(call):
                    self.metrics.arrivals += 1
                if self.log:
                    self.log(f"{t:.3f} arrive call={call.id} type={call.ctype} cell={call.cell}")
                dec = self._decide(self.policy.select, call, "select")
                self.apply(dec, arriving=call)
            if self.check:
                self.check_invariants(i)
        return self.metrics

    # -- decisions -------------------------------------------------------------
    def apply(self, d, arriving: Call | None = None, freed: int | None = None):
        st = self.state
        if self.log:
            self.log(f"{st.clock:.3f} decide {d!r}")
        if arriving is not None:
            if isinstance(d, Enqueue):
                if d.call != arriving.id:
                    raise InfeasibleDecision(d, "can only enqueue the arriving call", st.clock)
                st.queue.append(arriving)
                return
            if isinstance(d, (DispatchIdle, DispatchEnRoute)):
                if d.call != arriving.id:
                    raise InfeasibleDecision(d, "selection must concern the arriving call", st.clock)
                u = self._unit(d)
                if u.mode == JOB:
                    raise InfeasibleDecision(d, "ambulance is busy", st.clock)
                moving = u.mode == TRIP and u.eta > st.clock
                if moving != isinstance(d, DispatchEnRoute):
                    raise InfeasibleDecision(d, "ambulance status does not match dispatch kind", st.clock)
                origin = st.position(u.id)
                st.load[u.station] -= 1
                self._dispatch(u, arriving, d.hospital, origin, d)
                return
            raise InfeasibleDecision(d, "not a selection decision", st.clock)

        if getattr(d, "ambulance", None) != freed:
            raise InfeasibleDecision(d, f"reassignment must move the freed ambulance {freed}", st.clock)
        u = st.units[freed]
        origin = st.instance.geometry.centers[u.free_cell]
        if isinstance(d, ServeFromQueue):
            call = st.queued(d.call)
            if call is None:
                raise InfeasibleDecision(d, "call is not in the queue", st.clock)
            st.queue.remove(call)
            self._dispatch(u, call, d.hospital, origin, d)
            return
        if isinstance(d, Relocate):
            if not 0 <= d.station < len(st.instance.stations):
                raise InfeasibleDecision(d, "unknown station", st.clock)
            if st.spare(d.station) <= 0:
                raise InfeasibleDecision(d, "station is full", st.clock)
            st.load[d.station] += 1
            scell = st.instance.stations[d.station].cell
            u.mode, u.station, u.call, u.hospital = TRIP, d.station, None, None
            u.origin, u.depart = origin, st.clock
            if scell == u.free_cell:
                u.eta = st.clock
            else:
                ff = st.instance.leg[u.free_cell, scell]
                u.eta = st.clock + sample_travel_time(ff, self.reloc_draw(u.id))
            return
        raise InfeasibleDecision(d, "not a reassignment decision", st.clock)

    def _unit(self, d):
        if not 0 <= d.ambulance < len(self.state.units):
            raise InfeasibleDecision(d, "unknown ambulance", self.state.clock)
        return self.state.units[d.ambulance]

    def _dispatch(self, u: Unit, call: Call, hospital, origin, d):
        st, inst = self.state, self.instance
        needs = inst.types.types[call.ctype].needs_hospital
        if needs and (hospital is None or not 0 <= hospital < len(inst.hospitals)):
            raise InfeasibleDecision(d, "call needs a real hospital", st.clock)
        if not needs and hospital is not None:
            raise InfeasibleDecision(d, "call is released at the scene", st.clock)
        u_go, u_scene, u_trans, u_hosp = self.draws[call.id]
        sev = inst.types.types[call.ctype].severity
        ff = inst.leg_from_point(origin, call.cell)
        t_scene = st.clock + sample_travel_time(ff, u_go)
        t_done = t_scene + sample_scene_time(sev, u_scene)
        if needs:
            hcell = int(inst.hospital_cells[hospital])
            t_hosp = t_done + sample_travel_time(inst.leg[call.cell, hcell], u_trans)
            free = t_hosp + sample_hospital_time(sev, u_hosp)
        else:
            hcell, t_hosp, free = call.cell, t_done, t_done
        u.mode, u.call, u.hospital = JOB, call.id, hospital
        u.t_scene, u.t_scene_done, u.t_hosp, u.free_cell = t_scene, t_done, t_hosp, hcell
        wait = t_scene - call.time
        prt = penalized_response_time(inst.types, u.capability, call.ctype, wait)
        self.penalty_cost += prt
        self.dispatched[call.id] = (st.clock, t_scene)
        if self.counted(call):
            m = self.metrics
            m.waits.append(wait)
            m.prts.append(prt)
            m.types.append(call.ctype)
            m.capabilities.append(u.capability)
        self._push(float(free), u.id)

    # -- bookkeeping -------------------------------------------------------------
    def check_invariants(self, n_arrived: int):
        st = self.state
        if len(st.units) != len(self.instance.ambulances):
            raise AssertionError("fleet size changed")
        load = np.zeros_like(st.load)
        for u in st.units:
            if u.mode != JOB:
                load[u.station] += 1
        if not np.array_equal(load, st.load):
            raise AssertionError("station load out of sync")
        if np.any(st.load > self.instance.capacities):
            raise AssertionError("station over capacity")
        queued = {c.id for c in st.queue}
        on_job = {u.call for u in st.units if u.mode == JOB and u.free_at > st.clock}
        if queued & on_job:
            raise AssertionError("call both queued and assigned")
        if len(queued) != len(st.queue):
            raise AssertionError("duplicate queue entry")
        if any(t < st.clock for t, _, _ in self.heap):
            raise AssertionError("event in the past")

    def tally(self, calls: list[Call], end: float):
        """Split counted calls into served / in service / queued as of clock ``end``."""
        m = self.metrics
        m.served_at_end = m.in_service_at_end = m.queued_at_end = 0
        for c in calls:
            if not self.counted(c):
                continue
            rec = self.dispatched.get(c.id)
            if rec is None or rec[0] >= end:
                m.queued_at_end += 1
            elif rec[1] >= end:
                m.in_service_at_end += 1
            else:
                m.served_at_end += 1


# --------------------------------------------------------------------------
# a full replication


def _streams(seed: int):
    ss = np.random.SeedSequence(seed)
    arr, travel, service, policy = ss.spawn(4)
    return arr, travel, service, policy


def generate_window(rate_model: RateModel, start: float, end: float, seed: int):
    """Calls and their leg uniforms for one replication (independent of any policy)."""
    arr, travel, service, _ = _streams(seed)
    times, types, cells = sample_calls(rate_model, start, end, np.random.default_rng(arr))
    calls = [Call(i, float(t), int(c), int(l)) for i, (t, c, l) in enumerate(zip(times, types, cells))]
    trav = np.random.default_rng(travel).random((len(calls), 2))
    serv = np.random.default_rng(service).random((len(calls), 2))
    draws = {i: (trav[i, 0], serv[i, 0], trav[i, 1], serv[i, 1]) for i in range(len(calls))}
    return calls, draws


def run_replication(instance: Instance, rate_model: RateModel, policy, window: tuple[float, float],
                    seed: int, log=None, check: bool = False) -> ReplicationMetrics:
    start, end = window
    calls, draws = generate_window(rate_model, start, end, seed)
    _, travel, _, policy_stream = _streams(seed)
    reloc_rngs = [np.random.default_rng(s) for s in travel.spawn(len(instance.ambulances))]
    state = SystemState(instance, clock=start)
    state.seed = int(policy_stream.generate_state(1)[0])
    sim = Simulator(instance, policy, calls, draws, reloc_draw=lambda a: reloc_rngs[a].random(),
                    state=state, counted=lambda c: start <= c.time < end, log=log, check=check)
    if hasattr(policy, "reset"):
        policy.reset()
    metrics = sim.run()
    sim.tally(calls, end)
    return metrics
