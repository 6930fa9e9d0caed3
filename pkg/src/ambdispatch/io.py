"""Text formats for instances, rate models, call logs, scenarios and results.

Instance: JSON with ``format: "ambdispatch-instance"`` and ``version: 1``.
Rate model: CSV ``period,type,cell,rate`` listing nonzero entries, preceded
by a ``# ambdispatch-rates v1 period_length=<s> types=<n> cells=<n>`` line.
Call log: CSV ``weekday,seconds_of_week,type,cell`` with type given by name.
Scenario dump: JSON with the sampled calls and their leg uniforms.
Results: plain CSV with a header row.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import (Ambulance, Call, CostModel, DomainError, EmergencyType, GridGeometry, Hospital,
                   Instance, Station, TypeTable)
from .scenarios import DAY, WEEK, RateModel, Scenario

INSTANCE_FORMAT = "ambdispatch-instance"
INSTANCE_VERSION = 1
RATES_TAG = "# ambdispatch-rates v1"
CALL_LOG_HEADER = ["weekday", "seconds_of_week", "type", "cell"]


class FormatError(ValueError):
    """Malformed file; the message names the offending field or line."""


# --------------------------------------------------------------------------
# instances


def instance_to_dict(inst: Instance) -> dict:
    g = inst.geometry
    return {
        "format": INSTANCE_FORMAT,
        "version": INSTANCE_VERSION,
        "name": inst.name,
        "geometry": {"n_rows": g.n_rows, "n_cols": g.n_cols, "cell_width_km": g.cell_width_km,
                     "cell_height_km": g.cell_height_km, "speed_kmh": g.speed_kmh,
                     "active_cells": list(g.active_cells)},
        "stations": [{"id": s.id, "cell": s.cell, "capacity": s.capacity} for s in inst.stations],
        "hospitals": [{"id": h.id, "cell": h.cell} for h in inst.hospitals],
        "ambulances": [{"id": a.id, "capability": a.capability, "home": a.home} for a in inst.ambulances],
        "types": [{"name": t.name, "severity": t.severity, "urgency": t.urgency,
                   "needs_hospital": t.needs_hospital} for t in inst.types.types],
        "mismatch_hours": {k: list(v) for k, v in inst.types.mismatch_hours.items()},
        "costs": {"queue_weight": inst.costs.queue_weight, "station_cost": inst.costs.station_cost,
                  "enroute_cost": inst.costs.enroute_cost, "relocation_cost": inst.costs.relocation_cost},
        "min_leg_seconds": inst.min_leg_seconds,
        "hospital_choices": inst.hospital_choices,
    }


def _field(d: dict, key: str, where: str, kind=None):
    if key not in d:
        raise FormatError(f"{where}.{key} is missing")
    v = d[key]
    if kind is not None and (not isinstance(v, kind) or isinstance(v, bool)):
        raise FormatError(f"{where}.{key} has the wrong type ({type(v).__name__})")
    return v


def instance_from_dict(d: dict) -> Instance:
    if d.get("format") != INSTANCE_FORMAT:
        raise FormatError(f"format must be {INSTANCE_FORMAT!r}")
    if d.get("version") != INSTANCE_VERSION:
        raise FormatError(f"unsupported version {d.get('version')!r}")
    num = (int, float)
    try:
        gd = _field(d, "geometry", "instance", dict)
        geom = GridGeometry(_field(gd, "n_rows", "geometry", int), _field(gd, "n_cols", "geometry", int),
                            float(_field(gd, "cell_width_km", "geometry", num)),
                            float(_field(gd, "cell_height_km", "geometry", num)),
                            tuple(_field(gd, "active_cells", "geometry", list)),
                            float(gd.get("speed_kmh", 60.0)))
        stations = tuple(Station(_field(s, "id", f"stations[{i}]", int), _field(s, "cell", f"stations[{i}]", int),
                                 _field(s, "capacity", f"stations[{i}]", int))
                         for i, s in enumerate(_field(d, "stations", "instance", list)))
        hospitals = tuple(Hospital(_field(h, "id", f"hospitals[{i}]", int), _field(h, "cell", f"hospitals[{i}]", int))
                          for i, h in enumerate(_field(d, "hospitals", "instance", list)))
        ambulances = tuple(Ambulance(_field(a, "id", f"ambulances[{i}]", int),
                                     _field(a, "capability", f"ambulances[{i}]", str),
                                     _field(a, "home", f"ambulances[{i}]", int))
                           for i, a in enumerate(_field(d, "ambulances", "instance", list)))
        types = TypeTable(
            tuple(EmergencyType(_field(t, "name", f"types[{i}]", str), _field(t, "severity", f"types[{i}]", int),
                                float(_field(t, "urgency", f"types[{i}]", num)), bool(t.get("needs_hospital", True)))
                  for i, t in enumerate(_field(d, "types", "instance", list))),
            {k: tuple(float(x) for x in v) for k, v in _field(d, "mismatch_hours", "instance", dict).items()})
        costs = CostModel(**d.get("costs", {}))
        return Instance(geom, stations, hospitals, ambulances, types, costs,
                        float(d.get("min_leg_seconds", 60.0)), int(d.get("hospital_choices", 1)),
                        str(d.get("name", "instance")))
    except DomainError as e:
        raise FormatError(str(e)) from None
    except TypeError as e:
        raise FormatError(f"unexpected field: {e}") from None


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")


def load_instance(path) -> Instance:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not JSON ({e})") from None
    return instance_from_dict(d)


# --------------------------------------------------------------------------
# rate models


def save_rates(model: RateModel, path) -> None:
    p, n_types, n_cells = model.rates.shape
    with open(path, "w", newline="") as f:
        f.write(f"{RATES_TAG} period_length={model.period_length:g} types={n_types} cells={n_cells}\n")
        w = csv.writer(f)
        w.writerow(["period", "type", "cell", "rate"])
        for k, c, l in zip(*np.nonzero(model.rates)):
            w.writerow([k, c, l, repr(float(model.rates[k, c, l]))])


def load_rates(path) -> RateModel:
    with open(path, newline="") as f:
        head = f.readline().strip()
        if not head.startswith(RATES_TAG):
            raise FormatError(f"{path}:1: missing {RATES_TAG!r} line")
        meta = dict(kv.split("=", 1) for kv in head[len(RATES_TAG):].split())
        try:
            L, n_types, n_cells = float(meta["period_length"]), int(meta["types"]), int(meta["cells"])
        except (KeyError, ValueError):
            raise FormatError(f"{path}:1: need period_length, types and cells") from None
        if WEEK % L:
            raise FormatError(f"{path}:1: period_length must divide a week")
        rates = np.zeros((int(WEEK // L), n_types, n_cells))
        r = csv.reader(f)
        if next(r, None) != ["period", "type", "cell", "rate"]:
            raise FormatError(f"{path}:2: header must be period,type,cell,rate")
        for line, row in enumerate(r, start=3):
            try:
                k, c, l, v = int(row[0]), int(row[1]), int(row[2]), float(row[3])
                rates[k, c, l] = v
            except (ValueError, IndexError):
                raise FormatError(f"{path}:{line}: malformed row {row!r}") from None
    try:
        return RateModel(rates, L)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None


# --------------------------------------------------------------------------
# call logs


def save_call_log(calls, path, types: TypeTable) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CALL_LOG_HEADER)
        for c in calls:
            t = c.time % WEEK
            w.writerow([int(t // DAY), repr(float(c.time)), types.types[c.ctype].name, c.cell])


def load_call_log(path, types: TypeTable, n_cells: int) -> list[Call]:
    """Parse a call log; returns calls sorted by time with ids in sorted order."""
    names = {t.name: i for i, t in enumerate(types.types)}
    rows = []
    with open(path, newline="") as f:
        r = csv.reader(f)
        head = next(r, None)
        if head is None:
            return []
        if [h.strip() for h in head] != CALL_LOG_HEADER:
            raise FormatError(f"{path}:1: header must be {','.join(CALL_LOG_HEADER)}")
        for line, row in enumerate(r, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise FormatError(f"{path}:{line}: expected 4 fields, got {len(row)}")
            try:
                day, t, cell = int(row[0]), float(row[1]), int(row[3])
            except ValueError:
                raise FormatError(f"{path}:{line}: malformed number in {row!r}") from None
            if row[2] not in names:
                raise FormatError(f"{path}:{line}: unknown type code {row[2]!r}")
            if not 0 <= cell < n_cells:
                raise FormatError(f"{path}:{line}: cell {cell} out of range")
            if not math.isfinite(t) or t < 0:
                raise FormatError(f"{path}:{line}: bad time {row[1]!r}")
            if int((t % WEEK) // DAY) != day:
                raise FormatError(f"{path}:{line}: weekday {day} disagrees with time {t}")
            rows.append((t, names[row[2]], cell))
    rows.sort(key=lambda x: x[0])
    return [Call(i, t, c, l) for i, (t, c, l) in enumerate(rows)]


# --------------------------------------------------------------------------
# scenarios and results


def scenario_to_dict(sc: Scenario) -> dict:
    return {"format": "ambdispatch-scenario", "version": 1, "start": sc.start, "horizon": sc.horizon,
            "times": sc.times.tolist(), "types": sc.types.tolist(), "cells": sc.cells.tolist(),
            "uniforms": sc.uniforms.tolist(), "known_uniforms": sc.known_uniforms.tolist()}


def scenario_from_dict(d: dict) -> Scenario:
    if d.get("format") != "ambdispatch-scenario" or d.get("version") != 1:
        raise FormatError("not a version-1 scenario dump")
    return Scenario(float(d["start"]), float(d["horizon"]), np.array(d["times"], dtype=float),
                    np.array(d["types"], dtype=np.int64), np.array(d["cells"], dtype=np.int64),
                    np.array(d["uniforms"], dtype=float).reshape(-1, 4),
                    np.array(d["known_uniforms"], dtype=float).reshape(-1, 4))


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc)) + "\n")


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def write_results(rows: list[dict], path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def read_results(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))
