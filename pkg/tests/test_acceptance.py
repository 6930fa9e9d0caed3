"""Acceptance checks; each test records one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s``.  Criteria 7 and 8 share
one fleet sweep (all fourteen policies, fleets 10 and 20, four paired
replications, fifteen scenarios) that takes roughly a quarter of an hour.
"""
import math
import time

import numpy as np
import pytest

from ambdispatch.arc import build_second_stage, solve_full
from ambdispatch.colgen import (reduced_cost_enroute_dispatch, reduced_cost_hospital_dispatch,
                                reduced_cost_station_dispatch, solve_colgen)
from ambdispatch.experiment import ExperimentConfig, load_setting, run_experiment, run_one
from ambdispatch.itinerary import solve_set_partition
from ambdispatch.laws import sample_hospital_time, sample_scene_time, sample_travel_time
from ambdispatch.lp import OPTIMAL, check_certificate, solve, vertex_enumeration_oracle
from ambdispatch.policies import HEURISTICS
from ambdispatch.scenarios import FRIDAY, estimate_rates, synthetic_log, week_time
from ambdispatch.sim import JOB, STATION, TRIP, DispatchEnRoute, DispatchIdle, ServeFromQueue, run_replication

from factories import RandomPolicy, brute_force_partition, grid_instance, random_arc_case, random_lp, random_pools, \
    uniform_rates
from test_colgen import N_HOSP, N_STATIONS, N_TYPES, alpha_at, random_duals, random_tables

BASIC = tuple(HEURISTICS)


def test_colgen_matches_full_lp(criterion_report):
    solved, worst_gap, slowest, seed = 0, 0.0, 0.0, 0
    while solved < 20 and seed < 500:
        _, data, posts, demand = random_arc_case(np.random.default_rng(10_000 + seed))
        seed += 1
        pb = build_second_stage(data, posts, demand)
        k = next((k for k in range(len(posts)) if pb.feasible[k]), None)
        if k is None:
            continue
        direct = solve_full(pb, k)
        if direct.status != OPTIMAL:
            continue
        t0 = time.perf_counter()
        res = solve_colgen(pb, k)
        slowest = max(slowest, time.perf_counter() - t0)
        gap = abs(res.solution.objective - direct.objective) / max(1.0, abs(direct.objective))
        worst_gap = max(worst_gap, gap)
        solved += 1
    ok = solved >= 20 and worst_gap <= 1e-6 and slowest < 1.0
    criterion_report(1, ok, f"{solved} instances, max rel gap {worst_gap:.1e}, slowest {slowest:.3f} s")
    assert ok


def test_simplex_matches_vertex_oracle(criterion_report):
    optimal, mismatches, worst, seed = 0, 0, 0.0, 0
    while optimal < 50:
        prob = random_lp(np.random.default_rng(20_000 + seed))
        seed += 1
        s, o = solve(prob), vertex_enumeration_oracle(prob)
        if s.status != o.status:
            mismatches += 1
            continue
        if o.status != OPTIMAL:
            continue
        optimal += 1
        worst = max(worst, abs(s.objective - o.objective))
        if check_certificate(prob, s, tol=1e-9):
            mismatches += 1
    ok = mismatches == 0 and worst <= 1e-8
    criterion_report(2, ok, f"{optimal} optimal of {seed} LPs, max |gap| {worst:.1e}, "
                            f"status/certificate failures {mismatches}")
    assert ok


def test_branch_and_bound_exact(criterion_report):
    wrong = 0
    for seed in range(30):
        sp = random_pools(np.random.default_rng(30_000 + seed), n_amb=3, max_items=20, n_em=5)
        _, obj = solve_set_partition(sp, method="bb")
        wrong += obj != brute_force_partition(sp)
    criterion_report(3, wrong == 0, f"30 pools, {wrong} differ from enumeration")
    assert wrong == 0


def test_pricing_shortcuts(criterion_report):
    bad = {"station": 0, "hospital": 0, "enroute": 0}
    for seed in range(120):
        rng = np.random.default_rng(40_000 + seed)
        tab, d = random_tables(rng), random_duals(rng)
        t, a, l = int(rng.integers(1, 5)), int(rng.integers(2)), int(rng.integers(6))
        b, cell = int(rng.integers(N_STATIONS)), int(rng.integers(6))

        o = tab.station_cell(b)
        full = np.array([[tab.cost(c, a, o, l, h) + d.beta[(t, a, b)] - alpha_at(d, tab, t + tab.tau(c, a, o, l, h), a, h)
                          + d.phi[(t, c, l)] + d.gamma[(t, a, b)] + d.zeta[(t, c, l)]
                          for h in range(N_HOSP)] for c in range(N_TYPES)])
        _, c, h = reduced_cost_station_dispatch(tab, d, t, a, b, l)
        bad["station"] += (c, h) != np.unravel_index(np.argmin(full), full.shape)

        full = np.array([[tab.cost(c, a, cell, l, h) + d.alpha.get((t, a, cell), 0.0)
                          - alpha_at(d, tab, t + tab.tau(c, a, cell, l, h), a, h)
                          + d.phi[(t, c, l)] + d.zeta[(t, c, l)]
                          for h in range(N_HOSP)] for c in range(N_TYPES)])
        _, c, h = reduced_cost_hospital_dispatch(tab, d, t, a, cell, l)
        bad["hospital"] += (c, h) != np.unravel_index(np.argmin(full), full.shape)

        def move(s):
            nxt = tab.next_cell(cell, s)
            return (d.beta[(t, a, s)] if nxt == tab.station_cell(s) else d.psi[(t, a, s, nxt)]) \
                + d.theta[(t, a, s, cell)]

        full = np.array([[[tab.cost(c, a, cell, l, h) + move(s) - alpha_at(d, tab, t + tab.tau(c, a, cell, l, h), a, h)
                           + d.phi[(t, c, l)] + d.zeta[(t, c, l)]
                           for h in range(N_HOSP)] for s in range(N_STATIONS)] for c in range(N_TYPES)])
        _, c, s, h = reduced_cost_enroute_dispatch(tab, d, t, a, cell, l)
        bad["enroute"] += (c, s, h) != np.unravel_index(np.argmin(full), full.shape)
    ok = not any(bad.values())
    criterion_report(4, ok, f"120 dual vectors per shortcut, disagreements {bad}")
    assert ok


def test_distribution_means(criterion_report):
    u = np.random.default_rng(50_000).random(1_000_000)
    errs = {}
    for tf in (60.0, 600.0):
        errs[f"travel tf={tf:g}"] = sample_travel_time(tf, u).mean() / (2 * tf) - 1
    for c in (1, 2, 3):
        m = 150.0 * c
        errs[f"scene c={c}"] = sample_scene_time(c, u).mean() / (600 + m) - 1
        errs[f"hospital c={c}"] = sample_hospital_time(c, u).mean() / (600 + m * (1 - math.exp(-600 / m))) - 1
    worst = max(abs(e) for e in errs.values())
    criterion_report(5, worst < 0.01, f"10^6 draws, max relative error {worst:.2e}")
    assert worst < 0.01


class AuditedPolicy:
    """Wraps a policy and recounts ambulances and call dispositions at every decision."""

    def __init__(self, inner, fleet):
        self.inner, self.fleet = inner, fleet
        self.name = inner.name
        self.dispatched = set()
        self.violations = 0
        self.audits = 0

    def _audit(self, state, pending):
        self.audits += 1
        modes = [u.mode for u in state.units]
        queued = {c.id for c in state.queue}
        if len(modes) != self.fleet or any(m not in (STATION, TRIP, JOB) for m in modes):
            self.violations += 1
        if queued & self.dispatched or len(queued) != len(state.queue):
            self.violations += 1
        if len(state.calls) != len(queued) + len(self.dispatched) + pending:
            self.violations += 1
        load = np.bincount([u.station for u in state.units if u.mode != JOB], minlength=len(state.instance.stations))
        if np.any(load > state.instance.capacities):
            self.violations += 1

    def _note(self, d):
        if isinstance(d, (DispatchIdle, DispatchEnRoute, ServeFromQueue)):
            self.dispatched.add(d.call)
        return d

    def select(self, state, call):
        self._audit(state, 1)
        return self._note(self.inner.select(state, call))

    def reassign(self, state, a):
        self._audit(state, 0)
        return self._note(self.inner.reassign(state, a))


def test_simulator_conservation(criterion_report):
    inst = grid_instance(4, 4, km=3.0, stations=((0, 2), (5, 2), (10, 2), (15, 2)), hospitals=(6, 9),
                         ambulances=[0, 0, 1, 2, 3, 3])
    rates = uniform_rates(4, 16, 10.0)
    window = (0.0, 600 * 3600.0)
    pol = AuditedPolicy(RandomPolicy(7, enqueue_prob=0.3), len(inst.ambulances))
    m = run_replication(inst, rates, pol, window, seed=3, check=True)
    again = run_replication(inst, rates, RandomPolicy(7, enqueue_prob=0.3), window, seed=3, check=True)
    disposition = m.served_at_end + m.in_service_at_end + m.queued_at_end == m.arrivals
    ok = m.events >= 10_000 and pol.violations == 0 and disposition and m.as_tuple() == again.as_tuple()
    criterion_report(6, ok, f"{m.events} events, {pol.audits} audits, {pol.violations} violations, "
                            f"repeat bit-identical={m.as_tuple() == again.as_tuple()}")
    assert ok


@pytest.fixture(scope="session")
def sweep():
    cfg = ExperimentConfig()
    t0 = time.perf_counter()
    res = run_experiment(cfg, references=["itinerary", "arc"])
    return res, time.perf_counter() - t0


def _mean_prt(res, fleet, policy):
    return res.tables["arc"].get(fleet, policy)["mean_prt"]


def test_optimizers_beat_basic_heuristics(sweep, criterion_report):
    res, elapsed = sweep
    losses = [(n, opt, h) for n in (10, 20) for opt in ("arc", "itinerary") for h in BASIC
              if _mean_prt(res, n, opt) > _mean_prt(res, n, h)]
    summary = "; ".join(f"n={n}: arc {_mean_prt(res, n, 'arc'):.0f}, itinerary {_mean_prt(res, n, 'itinerary'):.0f}, "
                        f"best basic {min(_mean_prt(res, n, h) for h in BASIC):.0f}" for n in (10, 20))
    ok = not losses and elapsed < 1800
    criterion_report(7, ok, f"{summary}; sweep {elapsed / 60:.1f} min; losses {losses}")
    assert ok


def test_rollout_improves_each_heuristic(sweep, criterion_report):
    res, _ = sweep
    exceptions = {h: [n for n in (10, 20) if _mean_prt(res, n, f"rollout:{h}") > _mean_prt(res, n, h)] for h in BASIC}
    ok = all(len(v) <= 1 for v in exceptions.values())
    detail = ", ".join(f"{h}:{v}" for h, v in exceptions.items() if v) or "none"
    criterion_report(8, ok, f"fleet sizes where rollout lost: {detail}")
    assert ok


def test_decision_latency(criterion_report):
    cfg = ExperimentConfig(fleets=(30,), replications=2)
    seed = cfg.seeds()[0]
    mean = {p: float(np.mean(run_one(cfg, p, 30, seed).latencies)) for p in ("arc", "itinerary")}
    ok = max(mean.values()) <= 5.0 and mean["itinerary"] <= mean["arc"]
    criterion_report(9, ok, f"mean per decision at 30 units: arc {mean['arc']:.2f} s, "
                            f"itinerary {mean['itinerary']:.2f} s")
    assert ok


def test_rate_estimation_consistency(criterion_report):
    _, model = load_setting(None, None)
    weeks = 10_000
    lo, hi = week_time(FRIDAY, 18.0), week_time(FRIDAY, 20.0)
    log = synthetic_log(model, lo, hi, weeks, np.random.default_rng(60_000))
    est = estimate_rates(*log, weeks, model.rates.shape[1], model.rates.shape[2], model.period_length)
    ps = slice(model.period_of(lo), model.period_of(hi - 1) + 1)
    truth, got = model.rates[ps], est.rates[ps]
    live = truth > 0
    z = np.abs(got[live] - truth[live]) / np.sqrt(truth[live] / weeks)
    share = float(np.mean(z <= 3.0))
    criterion_report(10, share >= 0.95, f"{live.sum()} nonzero cells, {share:.2%} within 3 standard errors")
    assert share >= 0.95
