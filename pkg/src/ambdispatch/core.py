"""Grid geometry, fleet entities, emergency types and the penalized response time.

Everything here is immutable after construction.  Derived tables (cell
centers, the free-flow travel matrix, nearest-hospital lookups) are cached on
first use so that models and policies can share them without recomputation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when an argument falls outside the modelled domain."""


@dataclass(frozen=True, eq=False)
class GridGeometry:
    n_rows: int
    n_cols: int
    cell_width_km: float
    cell_height_km: float
    active_cells: tuple[int, ...]
    speed_kmh: float = 60.0

    def __post_init__(self):
        if self.n_rows <= 0 or self.n_cols <= 0:
            raise DomainError("grid dimensions must be positive")
        cells = tuple(sorted(set(int(c) for c in self.active_cells)))
        n = self.n_rows * self.n_cols
        if not cells or cells[0] < 0 or cells[-1] >= n:
            raise DomainError("active_cells must be nonempty ids in [0, n_rows*n_cols)")
        object.__setattr__(self, "active_cells", cells)

    @property
    def n_cells(self) -> int:
        return self.n_rows * self.n_cols

    @cached_property
    def centers(self) -> np.ndarray:
        """(n_cells, 2) array of cell-center coordinates in km, row-major ids."""
        ids = np.arange(self.n_cells)
        rows, cols = np.divmod(ids, self.n_cols)
        return np.column_stack([(cols + 0.5) * self.cell_width_km,
                                (rows + 0.5) * self.cell_height_km])

    @cached_property
    def active_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_cells, dtype=bool)
        mask[list(self.active_cells)] = True
        return mask

    @cached_property
    def active_array(self) -> np.ndarray:
        return np.asarray(self.active_cells, dtype=np.int64)

    @cached_property
    def travel_matrix(self) -> np.ndarray:
        """Free-flow seconds between every pair of cell centers."""
        diff = self.centers[:, None, :] - self.centers[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1]) / self.speed_kmh * 3600.0

    def is_active(self, cell: int) -> bool:
        return 0 <= cell < self.n_cells and bool(self.active_mask[cell])

    def check_active(self, cell: int) -> int:
        if not self.is_active(cell):
            raise DomainError(f"cell {cell} is not an active cell")
        return int(cell)

    def center(self, cell: int) -> np.ndarray:
        return self.centers[cell]

    def point_time(self, p, q) -> float:
        """Free-flow seconds between two arbitrary points (km coordinates)."""
        return math.hypot(q[0] - p[0], q[1] - p[1]) / self.speed_kmh * 3600.0

    def nearest_cell(self, point) -> int:
        """Active cell whose center is nearest ``point``; lowest id on ties."""
        act = self.active_array
        d = np.hypot(self.centers[act, 0] - point[0], self.centers[act, 1] - point[1])
        # round away float noise so exact geometric ties resolve by id
        d = np.round(d, 9)
        return int(act[int(np.argmin(d))])


def free_flow_time(geom: GridGeometry, cell_a: int, cell_b: int) -> float:
    geom.check_active(cell_a)
    geom.check_active(cell_b)
    return float(geom.travel_matrix[cell_a, cell_b])


def en_route_position(geom: GridGeometry, origin: int, dest: int, period: float) -> int:
    """Cell reached after one period of straight-line travel from ``origin`` to ``dest``."""
    geom.check_active(origin)
    geom.check_active(dest)
    remaining = geom.travel_matrix[origin, dest]
    if remaining <= period:
        return dest
    p, q = geom.centers[origin], geom.centers[dest]
    frac = period / remaining
    return geom.nearest_cell(p + frac * (q - p))


def reachable_sets(geom: GridGeometry, hospital_cells: Sequence[int], station_cell: int,
                   horizon: int, period: float) -> list[set[int]]:
    """Intermediate cells between hospitals and a station, per period 1..horizon.

    Level 1 holds the first step out of each hospital; level k steps once more
    from level k-1.  The set for period t is the union of levels 1..t, with the
    station itself always removed.
    """
    if horizon < 1:
        raise DomainError("horizon must be at least one period")
    level = {en_route_position(geom, h, station_cell, period) for h in hospital_cells}
    level.discard(station_cell)
    out, acc = [], set()
    for _ in range(horizon):
        acc |= level
        out.append(set(acc))
        level = {en_route_position(geom, c, station_cell, period) for c in level}
        level.discard(station_cell)
    return out


# --------------------------------------------------------------------------
# emergency types, capabilities and penalties

@dataclass(frozen=True)
class EmergencyType:
    name: str
    severity: int          # c in the service-time laws
    urgency: float         # theta, weight on waiting time
    needs_hospital: bool = True


DEFAULT_TYPES = (
    EmergencyType("A", 0, 1.0),
    EmergencyType("B", 1, 4.0),
    EmergencyType("C", 2, 1.0),
    EmergencyType("D", 3, 4.0),
)

# hours of penalty for capability mismatch, per capability and type
DEFAULT_MISMATCH = {"ALS": (1.0, 1.0, 0.0, 0.0), "BLS": (0.0, 0.0, 4.0, 4.0)}


@dataclass(frozen=True)
class TypeTable:
    types: tuple[EmergencyType, ...] = DEFAULT_TYPES
    mismatch_hours: dict = field(default_factory=lambda: dict(DEFAULT_MISMATCH))

    def __post_init__(self):
        n = len(self.types)
        for cap, row in self.mismatch_hours.items():
            if len(row) != n:
                raise DomainError(f"mismatch row for {cap} has {len(row)} entries, need {n}")
            if any(v < 0 for v in row):
                raise DomainError(f"negative mismatch penalty for {cap}")

    def __len__(self):
        return len(self.types)

    @property
    def capabilities(self) -> tuple[str, ...]:
        return tuple(self.mismatch_hours)

    def index(self, name: str) -> int:
        for i, t in enumerate(self.types):
            if t.name == name:
                return i
        raise DomainError(f"unknown emergency type {name!r}")

    @cached_property
    def urgency(self) -> np.ndarray:
        return np.array([t.urgency for t in self.types])

    @cached_property
    def severity(self) -> np.ndarray:
        return np.array([t.severity for t in self.types])

    @cached_property
    def needs_hospital(self) -> np.ndarray:
        return np.array([t.needs_hospital for t in self.types])

    def mismatch_seconds(self, capability: str) -> np.ndarray:
        return 3600.0 * np.asarray(self.mismatch_hours[capability], dtype=float)

    def priority(self, ctype: int) -> int:
        """Two-level priority seen by the literature baselines (1 = most urgent)."""
        return 1 if self.types[ctype].urgency > 1.0 else 2


def penalized_response_time(types: TypeTable, capability: str, ctype: int, wait: float) -> float:
    if wait < 0:
        raise DomainError("response time must be nonnegative")
    return types.types[ctype].urgency * wait + 3600.0 * types.mismatch_hours[capability][ctype]


# --------------------------------------------------------------------------
# fleet entities

@dataclass(frozen=True)
class Station:
    id: int
    cell: int
    capacity: int = 2


@dataclass(frozen=True)
class Hospital:
    id: int
    cell: int


@dataclass(frozen=True)
class Ambulance:
    id: int
    capability: str
    home: int   # station id


@dataclass(frozen=True)
class Call:
    id: int
    time: float
    ctype: int
    cell: int


@dataclass(frozen=True)
class CostModel:
    """Cost knobs shared by the optimization models.

    Dispatch cost defaults to the expected penalized response time.  Waiting
    in queue costs ``queue_weight * urgency * period`` per period; idle,
    en-route and relocation costs default to zero.
    """
    queue_weight: float = 1.0
    station_cost: float = 0.0
    enroute_cost: float = 0.0
    relocation_cost: float = 0.0

    def __post_init__(self):
        if min(self.queue_weight, self.station_cost, self.enroute_cost, self.relocation_cost) < 0:
            raise DomainError("cost parameters must be nonnegative")

    def queue_penalty(self, types: TypeTable, ctype: int, period: float) -> float:
        return self.queue_weight * types.types[ctype].urgency * period

    def unserved_penalty(self, types: TypeTable, ctype: int, horizon: float) -> float:
        worst = max(max(row) for row in types.mismatch_hours.values())
        return types.types[ctype].urgency * horizon + 3600.0 * worst


@dataclass(frozen=True, eq=False)
class Instance:
    geometry: GridGeometry
    stations: tuple[Station, ...]
    hospitals: tuple[Hospital, ...]
    ambulances: tuple[Ambulance, ...]
    types: TypeTable = field(default_factory=TypeTable)
    costs: CostModel = field(default_factory=CostModel)
    min_leg_seconds: float = 60.0     # floor on any physical trip, incl. same-cell
    hospital_choices: int = 1         # k nearest hospitals offered to the models
    name: str = "instance"

    def __post_init__(self):
        g = self.geometry
        for i, s in enumerate(self.stations):
            if s.id != i:
                raise DomainError(f"stations[{i}].id must equal its position")
            if not g.is_active(s.cell):
                raise DomainError(f"stations[{i}].cell {s.cell} is not active")
            if s.capacity < 0:
                raise DomainError(f"stations[{i}].capacity is negative")
        for i, h in enumerate(self.hospitals):
            if h.id != i:
                raise DomainError(f"hospitals[{i}].id must equal its position")
            if not g.is_active(h.cell):
                raise DomainError(f"hospitals[{i}].cell {h.cell} is not active")
        for i, a in enumerate(self.ambulances):
            if a.id != i:
                raise DomainError(f"ambulances[{i}].id must equal its position")
            if not 0 <= a.home < len(self.stations):
                raise DomainError(f"ambulances[{i}].home refers to missing station {a.home}")
            if a.capability not in self.types.mismatch_hours:
                raise DomainError(f"ambulances[{i}].capability {a.capability!r} unknown")
        if not self.hospitals:
            raise DomainError("instance needs at least one hospital")

    # -- derived tables ----------------------------------------------------
    @cached_property
    def leg(self) -> np.ndarray:
        """Free-flow trip seconds between cells, floored at ``min_leg_seconds``."""
        return np.maximum(self.geometry.travel_matrix, self.min_leg_seconds)

    def leg_from_point(self, point, cell: int) -> float:
        return max(self.geometry.point_time(point, self.geometry.centers[cell]), self.min_leg_seconds)

    @cached_property
    def station_cells(self) -> np.ndarray:
        return np.array([s.cell for s in self.stations], dtype=np.int64)

    @cached_property
    def hospital_cells(self) -> np.ndarray:
        return np.array([h.cell for h in self.hospitals], dtype=np.int64)

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([s.capacity for s in self.stations], dtype=np.int64)

    @cached_property
    def hospital_rank(self) -> np.ndarray:
        """(n_cells, n_hospitals) hospital ids sorted by travel time, ties by id."""
        tt = self.geometry.travel_matrix[:, self.hospital_cells]
        return np.argsort(tt, axis=1, kind="stable")

    def hospitals_for(self, ctype: int, cell: int) -> list[int | None]:
        """Candidate hospitals for a call; ``None`` marks release at the scene."""
        if not self.types.types[ctype].needs_hospital:
            return [None]
        return [int(h) for h in self.hospital_rank[cell, :self.hospital_choices]]

    def nearest_hospital(self, cell: int) -> int:
        return int(self.hospital_rank[cell, 0])

    @cached_property
    def station_rank(self) -> np.ndarray:
        """(n_cells, n_stations) station ids sorted by travel time, ties by id."""
        tt = self.geometry.travel_matrix[:, self.station_cells]
        return np.argsort(tt, axis=1, kind="stable")

    def with_fleet(self, n: int) -> "Instance":
        """First ``n`` stations, each housing the ambulance with the same index."""
        if not 1 <= n <= min(len(self.stations), len(self.ambulances)):
            raise DomainError(f"fleet size {n} outside available stations/ambulances")
        return Instance(self.geometry, self.stations[:n], self.hospitals,
                        tuple(Ambulance(a.id, a.capability, a.id) for a in self.ambulances[:n]),
                        self.types, self.costs, self.min_leg_seconds, self.hospital_choices,
                        f"{self.name}-{n}")
