"""The literature baselines, in the simplified form used for comparison.

Priorities: types with urgency above 1 are priority 1, the rest priority 2.
Capability costs are invisible to all of these rules by construction.

The preparedness score is a reconstruction (the source rule is only
described in words): for zone l with demand weight d_l,

    prep(l) = (1 / d_l) * sum_j 2^-rank_j(l) / max(travel_j(l), floor)

over available ambulances j ranked by expected travel time to l.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Call
from ..sim import Enqueue, Relocate, SystemState
from .base import (closest_available, closest_queued, dispatch, expected_travel_from,
                   go_home, nearest_station, oldest_queued, serve, stations_with_space)


def _rk(x):
    return round(float(x), 6)


# --------------------------------------------------------------------------
# zone scores


@dataclass
class PreparednessModel:
    zones: np.ndarray        # cell ids with positive demand
    weights: np.ndarray      # demand per zone
    floor: float = 60.0

    @classmethod
    def from_weights(cls, cell_weights: np.ndarray, floor: float = 60.0):
        zones = np.flatnonzero(cell_weights > 0)
        return cls(zones, cell_weights[zones], floor)

    def scores(self, travel: np.ndarray) -> np.ndarray:
        """Preparedness per zone given (ambulances, zones) expected travel times."""
        if travel.shape[0] == 0:
            return np.zeros(len(self.zones))
        t = np.sort(np.maximum(travel, self.floor), axis=0)
        rank = np.arange(1, t.shape[0] + 1)[:, None]
        return (np.power(2.0, -rank) / t).sum(axis=0) / self.weights

    def minimum(self, travel: np.ndarray) -> float:
        return float(self.scores(travel).min()) if len(self.zones) else 0.0

    def minimum_with(self, travel: np.ndarray, extra: np.ndarray) -> np.ndarray:
        """Minimum preparedness after adding each row of ``extra`` in turn."""
        if not len(self.zones):
            return np.zeros(len(extra))
        t = np.sort(np.maximum(travel, self.floor), axis=0)
        x = np.maximum(extra, self.floor)
        k, nz = t.shape
        w = np.power(2.0, -np.arange(1, k + 2))[:, None]
        head = np.vstack([np.zeros(nz), np.cumsum(w[:k] * (1.0 / t), axis=0)])
        tail = np.vstack([np.cumsum((w[1:] / t)[::-1], axis=0)[::-1], np.zeros(nz)])
        # rank of the new row: after every existing entry it does not beat
        pos = (t[None, :, :] <= x[:, None, :]).sum(axis=1)
        cols = np.arange(nz)
        score = head[pos, cols] + np.power(2.0, -(pos + 1.0)) / x + tail[pos, cols]
        return (score / self.weights).min(axis=1)

    def minimum_without(self, travel: np.ndarray) -> np.ndarray:
        """Minimum preparedness after removing each ambulance in turn."""
        k = travel.shape[0]
        if k <= 1 or not len(self.zones):
            return np.zeros(k)
        order = np.argsort(np.maximum(travel, self.floor), axis=0, kind="stable")
        t = np.take_along_axis(np.maximum(travel, self.floor), order, axis=0)
        inv = 1.0 / t
        w = np.power(2.0, -np.arange(1, k + 1))[:, None]
        # removing rank r keeps the terms above it and promotes the ones below
        before = np.vstack([np.zeros(len(self.zones)), np.cumsum(w * inv, axis=0)[:-1]])
        below = 2.0 * w * inv
        after = np.vstack([np.cumsum(below[::-1], axis=0)[::-1][1:], np.zeros(len(self.zones))])
        by_rank = (before + after) / self.weights
        out = np.empty_like(by_rank)
        np.put_along_axis(out, order, by_rank, axis=0)
        return out.min(axis=1)


def mexclp(travel: np.ndarray, weights: np.ndarray, threshold: float, busy: float) -> float:
    """Expected covered demand: sum_l d_l (1 - q^n_l) with n_l ambulances within threshold."""
    n = (travel <= threshold).sum(axis=0)
    return float(np.sum(weights * (1.0 - busy ** n)))


def covered_count(travel: np.ndarray, threshold: float) -> int:
    return int(np.any(travel <= threshold, axis=0).sum())


# --------------------------------------------------------------------------


class Heuristic:
    """Base class: subclasses override ``choose`` for the selection decision."""
    name = "heuristic"

    def __init__(self, instance, cell_weights: np.ndarray):
        self.instance = instance
        self.cell_weights = np.asarray(cell_weights, dtype=float)

    def select(self, state: SystemState, call: Call):
        a = self.choose(state, call)
        return Enqueue(call.id) if a is None else dispatch(state, a, call)

    def choose(self, state, call):
        return closest_available(state, call)

    def reassign(self, state: SystemState, a: int):
        c = closest_queued(state, a)
        return serve(state, a, c) if c is not None else go_home(state, a)


class ClosestAvailable(Heuristic):
    name = "closest"


class Andersson(Heuristic):
    """Priority 1: closest.  Otherwise: within ``threshold`` seconds, least drop in minimum preparedness."""
    name = "andersson"

    def __init__(self, instance, cell_weights, threshold: float = 1200.0, prep_fraction: float = 0.5):
        super().__init__(instance, cell_weights)
        self.threshold = threshold
        self.prep = PreparednessModel.from_weights(self.cell_weights)
        homes = instance.station_cells[[a.home for a in instance.ambulances]]
        tt = 2.0 * instance.leg[np.ix_(homes, self.prep.zones)]
        self.target = prep_fraction * self.prep.minimum(tt)

    def choose(self, state, call):
        ids = state.available()
        if not ids:
            return None
        if self.instance.types.priority(call.ctype) == 1:
            return closest_available(state, call)
        to_call = expected_travel_from(state, ids, [call.cell])[:, 0]
        near = [i for i in range(len(ids)) if to_call[i] <= self.threshold]
        if not near:
            return closest_available(state, call)
        zone_tt = expected_travel_from(state, ids, self.prep.zones)
        after = self.prep.minimum_without(zone_tt)
        k = min(near, key=lambda i: (-_rk(after[i]), _rk(to_call[i]), ids[i]))
        return ids[k]

    def reassign(self, state, a):
        c = closest_queued(state, a)
        if c is not None:
            return serve(state, a, c)
        opts = stations_with_space(state)
        inst = self.instance
        others = [j for j in state.available()]
        zone_tt = expected_travel_from(state, others, self.prep.zones)
        leg = inst.leg[state.units[a].free_cell]
        rows = 2.0 * inst.leg[np.ix_(inst.station_cells[opts], self.prep.zones)]
        mins = self.prep.minimum_with(zone_tt, rows)
        scored = [(b, m, leg[inst.station_cells[b]]) for b, m in zip(opts, mins)]
        ok = [s for s in scored if s[1] >= self.target]
        if ok:
            b = min(ok, key=lambda s: (_rk(s[2]), s[0]))[0]
        else:
            b = min(scored, key=lambda s: (-_rk(s[1]), _rk(s[2]), s[0]))[0]
        return Relocate(a, b)


class Lee(Heuristic):
    """Maximize (minimum preparedness without the ambulance) / travel time to the call."""
    name = "lee"

    def __init__(self, instance, cell_weights):
        super().__init__(instance, cell_weights)
        self.prep = PreparednessModel.from_weights(self.cell_weights)

    def choose(self, state, call):
        ids = state.available()
        if not ids:
            return None
        to_call = expected_travel_from(state, ids, [call.cell])[:, 0]
        after = self.prep.minimum_without(expected_travel_from(state, ids, self.prep.zones))
        ratio = after / to_call
        k = min(range(len(ids)), key=lambda i: (-_rk(ratio[i] * 1e6), _rk(to_call[i]), ids[i]))
        return ids[k]

    def reassign(self, state, a):
        c = closest_queued(state, a)
        if c is not None:
            return serve(state, a, c)
        return Relocate(a, nearest_station(state, a))


class Bandara(Heuristic):
    """Priority 1: closest.  Priority 2: among ambulances within ``slack`` times the
    nearest travel time, the one whose removal keeps the most high-demand cells covered."""
    name = "bandara"

    def __init__(self, instance, cell_weights, cover: float = 900.0, slack: float = 1.5,
                 high_quantile: float = 0.75):
        super().__init__(instance, cell_weights)
        self.cover, self.slack = cover, slack
        pos = self.cell_weights[self.cell_weights > 0]
        cut = np.quantile(pos, high_quantile) if len(pos) else 0.0
        self.high = np.flatnonzero(self.cell_weights >= cut) if len(pos) else np.zeros(0, dtype=int)

    def pick(self, state, call, ids):
        if not ids:
            return None
        to_call = expected_travel_from(state, ids, [call.cell])[:, 0]
        nearest = min(range(len(ids)), key=lambda i: (_rk(to_call[i]), ids[i]))
        if self.instance.types.priority(call.ctype) == 1:
            return ids[nearest]
        near = [i for i in range(len(ids)) if to_call[i] <= self.slack * to_call[nearest] + 1e-9]
        tt = expected_travel_from(state, ids, self.high)
        kept = {i: covered_count(np.delete(tt, i, axis=0), self.cover) for i in near}
        k = min(near, key=lambda i: (-kept[i], _rk(to_call[i]), ids[i]))
        return ids[k]

    def choose(self, state, call):
        return self.pick(state, call, state.available())

    def reassign(self, state, a):
        c = closest_queued(state, a)
        return serve(state, a, c) if c is not None else go_home(state, a)


class Mayorga(Bandara):
    """Voronoi districts around stations; Bandara's rule inside the district,
    otherwise a static nearness-ordered preference list."""
    name = "mayorga"

    def __init__(self, instance, cell_weights, **kw):
        super().__init__(instance, cell_weights, **kw)
        self.district = instance.station_rank[:, 0]            # cell -> station
        homes = instance.station_cells[[a.home for a in instance.ambulances]]
        self.preference = np.argsort(instance.leg[homes].T, axis=1, kind="stable")   # cell -> ambulances

    def choose(self, state, call):
        ids = state.available()
        if not ids:
            return None
        d = self.district[call.cell]
        inside = [a for a in ids if self.instance.ambulances[a].home == d]
        if inside:
            return self.pick(state, call, inside)
        free = set(ids)
        for a in self.preference[call.cell]:
            if int(a) in free:
                return int(a)
        return None


class Jagtenberg(Heuristic):
    """Dynamic MEXCLP: keep the largest expected coverage after the dispatch."""
    name = "jagtenberg"

    def __init__(self, instance, cell_weights, busy: float = 0.4, threshold: float = 900.0):
        super().__init__(instance, cell_weights)
        if not 0 < busy < 1:
            raise ValueError("busy fraction must lie in (0, 1)")
        self.busy, self.threshold = busy, threshold
        self.zones = np.flatnonzero(self.cell_weights > 0)

    def coverage_without(self, state, ids):
        tt = expected_travel_from(state, ids, self.zones)
        w = self.cell_weights[self.zones]
        return np.array([mexclp(np.delete(tt, j, axis=0), w, self.threshold, self.busy)
                         for j in range(len(ids))])

    def choose(self, state, call):
        ids = state.available()
        if not ids:
            return None
        to_call = expected_travel_from(state, ids, [call.cell])[:, 0]
        cov = self.coverage_without(state, ids)
        near = [i for i in range(len(ids)) if to_call[i] <= self.threshold]
        pool = near or list(range(len(ids)))
        k = min(pool, key=lambda i: (-_rk(cov[i]), _rk(to_call[i]), ids[i]))
        return ids[k]

    def reassign(self, state, a):
        c = oldest_queued(state)
        return serve(state, a, c) if c is not None else go_home(state, a)
