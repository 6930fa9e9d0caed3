"""The shipped synthetic city: a 10x10 grid with an irregular coastline.

Clearly synthetic.  Demand is a sum of Gaussian bumps over the active cells
(a dense center and two secondary hot spots).  Hospitals and stations are
placed by greedy weighted p-median, so the first k stations of the station
list are a sensible k-station layout for every k.
"""
from __future__ import annotations

import numpy as np

from .core import Ambulance, GridGeometry, Hospital, Instance, Station
from .scenarios import DAY, FRIDAY, WEEK, RateModel

N_ROWS = N_COLS = 10
CELL_KM = 3.0
N_ACTIVE = 76
N_HOSPITALS = 10
N_STATIONS = 30
TYPE_MIX = np.array([0.35, 0.25, 0.25, 0.15])      # A, B, C, D
BUMPS = ((4.0, 5.0, 1.0, 1.6), (7.0, 2.5, 0.55, 1.2), (2.0, 7.5, 0.4, 1.0))   # row, col, height, sd


def active_cells() -> tuple[int, ...]:
    """Inner blob plus a tilted shoreline: the 76 lowest-score cells."""
    r, c = np.divmod(np.arange(N_ROWS * N_COLS), N_COLS)
    score = np.hypot((c - 4.5) / 1.15, (r - 4.5) / 0.95) + 0.25 * (c - r) / 4.5
    order = np.lexsort((np.arange(len(score)), np.round(score, 9)))
    return tuple(sorted(int(i) for i in order[:N_ACTIVE]))


def demand_surface(geom: GridGeometry) -> np.ndarray:
    """Relative demand per cell (zero on inactive cells), summing to one."""
    r, c = np.divmod(np.arange(geom.n_cells), geom.n_cols)
    w = np.zeros(geom.n_cells)
    for br, bc, h, sd in BUMPS:
        w += h * np.exp(-((r - br) ** 2 + (c - bc) ** 2) / (2 * sd * sd))
    w = np.where(geom.active_mask, w + 0.02, 0.0)
    return w / w.sum()


def greedy_median(cost: np.ndarray, weights: np.ndarray, candidates: np.ndarray, k: int) -> list[int]:
    """Greedy weighted p-median: each step adds the site that most reduces total weighted cost."""
    chosen: list[int] = []
    best = np.full(cost.shape[1], np.inf)
    for _ in range(k):
        left = [s for s in candidates if s not in chosen]
        totals = [float(np.sum(weights * np.minimum(best, cost[s]))) for s in left]
        s = left[int(np.argmin(totals))]
        chosen.append(int(s))
        best = np.minimum(best, cost[s])
    return chosen


def make_instance(name: str = "rio-like-synthetic") -> Instance:
    geom = GridGeometry(N_ROWS, N_COLS, CELL_KM, CELL_KM, active_cells())
    w = demand_surface(geom)
    act = geom.active_array
    tt = geom.travel_matrix
    hospitals = greedy_median(tt, w, act, N_HOSPITALS)
    stations = greedy_median(tt, w, act, N_STATIONS)
    return Instance(
        geom,
        tuple(Station(i, c, 2) for i, c in enumerate(stations)),
        tuple(Hospital(i, c) for i, c in enumerate(sorted(hospitals))),
        tuple(Ambulance(i, "ALS" if i % 3 == 0 else "BLS", i) for i in range(N_STATIONS)),
        name=name,
    )


def make_rates(instance: Instance, calls_per_hour: float = 6.0, period: float = 1800.0) -> RateModel:
    """Friday-only rates with an evening peak; ``calls_per_hour`` holds over 18:00-20:00."""
    n_periods = int(WEEK // period)
    w = demand_surface(instance.geometry)
    rates = np.zeros((n_periods, len(TYPE_MIX), instance.geometry.n_cells))
    per_day = int(DAY // period)
    hours = (np.arange(per_day) + 0.5) * period / 3600.0
    shape = 0.55 + 0.45 * np.exp(-((hours - 19.0) / 3.0) ** 2)
    shape /= shape[(hours > 18) & (hours < 20)].mean()
    per_period = calls_per_hour * period / 3600.0
    base = per_period * TYPE_MIX[:, None] * w[None, :]
    first = FRIDAY * per_day
    for k in range(per_day):
        rates[first + k] = shape[k] * base
    return RateModel(rates, period)
