"""Helpers shared by every policy: travel estimates, decision builders, fleet views."""
from __future__ import annotations

import numpy as np

from ..core import Call
from ..sim import (DispatchEnRoute, DispatchIdle, Relocate, ServeFromQueue, SystemState)


def expected_travel_from(state: SystemState, ids, cells) -> np.ndarray:
    """(len(ids), len(cells)) expected travel seconds from current positions."""
    inst = state.instance
    cells = np.atleast_1d(np.asarray(cells, dtype=np.int64))
    if len(ids) == 0:
        return np.zeros((0, len(cells)))
    pos = np.array([state.position(a) for a in ids])
    tgt = inst.geometry.centers[cells]
    d = np.hypot(pos[:, None, 0] - tgt[None, :, 0], pos[:, None, 1] - tgt[None, :, 1])
    ff = d / inst.geometry.speed_kmh * 3600.0
    return 2.0 * np.maximum(ff, inst.min_leg_seconds)


def dispatch(state: SystemState, a: int, call: Call, hospital="nearest"):
    if hospital == "nearest":
        hospital = state.instance.hospitals_for(call.ctype, call.cell)[0]
    cls = DispatchEnRoute if state.is_en_route(a) else DispatchIdle
    return cls(a, call.id, hospital)


def serve(state: SystemState, a: int, call: Call):
    return ServeFromQueue(a, call.id, state.instance.hospitals_for(call.ctype, call.cell)[0])


def closest_queued(state: SystemState, a: int) -> Call | None:
    if not state.queue:
        return None
    cell = state.units[a].free_cell
    leg = state.instance.leg[cell]
    return min(state.queue, key=lambda c: (leg[c.cell], c.time, c.id))


def oldest_queued(state: SystemState) -> Call | None:
    return min(state.queue, key=lambda c: (c.time, c.id)) if state.queue else None


def stations_with_space(state: SystemState) -> list[int]:
    return [b for b in range(len(state.instance.stations)) if state.spare(b) > 0]


def nearest_station(state: SystemState, a: int, options=None) -> int:
    cell = state.units[a].free_cell
    opts = stations_with_space(state) if options is None else options
    leg = state.instance.leg[cell]
    cells = state.instance.station_cells
    return min(opts, key=lambda b: (leg[cells[b]], b))


def go_home(state: SystemState, a: int):
    home = state.instance.ambulances[a].home
    if state.spare(home) > 0:
        return Relocate(a, home)
    return Relocate(a, nearest_station(state, a))


def closest_available(state: SystemState, call: Call) -> int | None:
    ids = state.available()
    if not ids:
        return None
    tt = expected_travel_from(state, ids, [call.cell])[:, 0]
    k = min(range(len(ids)), key=lambda i: (tt[i], ids[i]))
    return ids[k]
