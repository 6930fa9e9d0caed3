"""Piecewise-constant Poisson call model, rate estimation and scenario sampling.

Times are seconds-of-week (Monday 00:00 = 0).  A rate model stores the
expected number of calls per (week period, type, cell).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WEEK = 7 * 86400
DAY = 86400
FRIDAY = 4


def week_time(weekday: int, hour: float) -> float:
    return weekday * DAY + hour * 3600.0


@dataclass(frozen=True, eq=False)
class RateModel:
    rates: np.ndarray            # (periods per week, n_types, n_cells)
    period_length: float = 1800.0

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float)
        if r.ndim != 3:
            raise ValueError("rates must be (periods, types, cells)")
        if r.shape[0] * self.period_length != WEEK:
            raise ValueError(f"{r.shape[0]} periods of {self.period_length}s do not cover a week")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValueError("rates must be finite and nonnegative")
        object.__setattr__(self, "rates", r)

    @property
    def n_types(self) -> int:
        return self.rates.shape[1]

    @property
    def n_cells(self) -> int:
        return self.rates.shape[2]

    def period_of(self, t: float) -> int:
        return int((t % WEEK) // self.period_length)

    def intensity(self, start: float, end: float) -> np.ndarray:
        """Expected calls per (type, cell) over [start, end)."""
        total = np.zeros(self.rates.shape[1:])
        for p, frac, _, _ in self._pieces(start, end):
            total += frac * self.rates[p]
        return total

    def cell_weights(self, start: float, end: float) -> np.ndarray:
        """Expected calls per cell over a window, summed over types."""
        return self.intensity(start, end).sum(axis=0)

    def _pieces(self, start, end):
        t = start
        L = self.period_length
        while t < end:
            edge = (np.floor(t / L) + 1) * L
            stop = min(edge, end)
            yield self.period_of(t), (stop - t) / L, t, stop
            t = stop


def sample_calls(model: RateModel, start: float, end: float, rng: np.random.Generator):
    """Poisson calls on [start, end); returns sorted (times, types, cells) arrays."""
    times, types, cells = [], [], []
    for p, frac, lo, hi in model._pieces(start, end):
        counts = rng.poisson(model.rates[p] * frac)
        k = int(counts.sum())
        if not k:
            continue
        tt, cc = np.nonzero(counts)
        reps = counts[tt, cc]
        types.append(np.repeat(tt, reps))
        cells.append(np.repeat(cc, reps))
        times.append(rng.uniform(lo, hi, k))
    if not times:
        return np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    times = np.concatenate(times)
    order = np.argsort(times, kind="stable")
    return times[order], np.concatenate(types)[order], np.concatenate(cells)[order]


@dataclass
class Scenario:
    """A sampled future over [start, start + horizon).

    ``uniforms`` has one row per sampled call with the four leg draws
    (to scene, scene, to hospital, handoff); ``known_uniforms`` covers calls
    already in the system when the scenario was drawn.
    """
    start: float
    horizon: float
    times: np.ndarray
    types: np.ndarray
    cells: np.ndarray
    uniforms: np.ndarray
    known_uniforms: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))

    def __len__(self):
        return len(self.times)


def sample_scenario(model: RateModel, start: float, horizon: float, rng: np.random.Generator,
                    n_known: int = 0) -> Scenario:
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    times, types, cells = sample_calls(model, start, start + horizon, rng)
    uniforms = rng.random((len(times), 4))
    known = rng.random((n_known, 4))
    return Scenario(start, horizon, times, types, cells, uniforms, known)


def discretize_for_arc_model(scenario: Scenario, period: float, n_types: int, n_cells: int) -> np.ndarray:
    """Integer counts (periods, types, cells); period k covers [start+k*period, start+(k+1)*period)."""
    n_periods = int(round(scenario.horizon / period))
    if abs(n_periods * period - scenario.horizon) > 1e-6:
        raise ValueError("period must divide the horizon")
    counts = np.zeros((n_periods, n_types, n_cells), dtype=np.int64)
    if len(scenario):
        k = np.floor((scenario.times - scenario.start) / period).astype(np.int64)
        np.add.at(counts, (np.minimum(k, n_periods - 1), scenario.types, scenario.cells), 1)
    return counts


def estimate_rates(week_times, types, cells, exposure_weeks: float, n_types: int, n_cells: int,
                   period_length: float = 1800.0) -> RateModel:
    """Maximum-likelihood rates: counts per (week period, type, cell) divided by exposure."""
    if exposure_weeks <= 0:
        raise ValueError("exposure must be positive")
    n_periods = int(WEEK // period_length)
    counts = np.zeros((n_periods, n_types, n_cells))
    if len(week_times):
        p = ((np.asarray(week_times) % WEEK) // period_length).astype(np.int64)
        np.add.at(counts, (p, np.asarray(types), np.asarray(cells)), 1.0)
    return RateModel(counts / exposure_weeks, period_length)


def synthetic_log(model: RateModel, start: float, end: float, n_weeks: int, rng: np.random.Generator):
    """Concatenate ``n_weeks`` independent copies of the window, in seconds-of-week."""
    ts, cs, ls = [], [], []
    for _ in range(n_weeks):
        t, c, l = sample_calls(model, start, end, rng)
        ts.append(t)
        cs.append(c)
        ls.append(l)
    return np.concatenate(ts), np.concatenate(cs), np.concatenate(ls)
