import numpy as np
import pytest

from ambdispatch.arc import XS, Y, ArcConfig, ArcData, PostDecision, build_second_stage, solve_full
from ambdispatch.colgen import (DualSolution, PricingTables, arc_pricing_tables, generate_columns,
                                reduced_cost_enroute_dispatch, reduced_cost_hospital_dispatch,
                                reduced_cost_station_dispatch, reduced_costs, solve_colgen)
from ambdispatch.lp import NUMERICAL, OPTIMAL, solve

from factories import grid_instance, hand_arc_case, random_arc_case

N_TYPES, N_HOSP, N_STATIONS, HORIZON = 4, 3, 3, 4


def tables(cost=lambda c, a, o, l, h: 2.0, tau=lambda c, a, o, l, h: 1, hospitals=(0,), stations=(0,),
           next_cell=lambda cell, b: 9, station_cell=lambda b: b):
    return PricingTables(N_TYPES, HORIZON, cost, tau, lambda c, l: list(hospitals),
                         lambda t, a, cell: list(stations), next_cell, station_cell)


class TestStationDispatch:
    def test_zero_duals(self):
        v, _, _ = reduced_cost_station_dispatch(tables(), DualSolution(), 1, 0, 0, 5)
        assert v == 2.0

    def test_one_negative_queue_dual(self):
        d = DualSolution(phi={(1, 2, 5): -10.0})
        v, c, _ = reduced_cost_station_dispatch(tables(), d, 1, 0, 0, 5)
        assert (v, c) == (-8.0, 2)

    def test_far_hospital_critical(self):
        # far hospital costs 3 more but its arrival dual is 5 larger
        tab = tables(cost=lambda c, a, o, l, h: 2.0 + 3.0 * h, hospitals=(0, 1))
        d = DualSolution(alpha={(2, 0, 1): 5.0})
        v, _, h = reduced_cost_station_dispatch(tab, d, 1, 0, 0, 5)
        assert h == 1 and v == pytest.approx(0.0)

    def test_alpha_beyond_horizon_is_zero(self):
        tab = tables(tau=lambda *k: 10)
        d = DualSolution(alpha={(11, 0, 0): 100.0})
        assert reduced_cost_station_dispatch(tab, d, 1, 0, 0, 5)[0] == 2.0


class TestHospitalDispatch:
    def test_zero_duals(self):
        assert reduced_cost_hospital_dispatch(tables(cost=lambda *k: 3.0), DualSolution(), 1, 0, 7, 5)[0] == 3.0

    def test_origin_alpha(self):
        d = DualSolution(alpha={(1, 0, 7): -5.0})
        assert reduced_cost_hospital_dispatch(tables(cost=lambda *k: 3.0), d, 1, 0, 7, 5)[0] == -2.0


class TestEnrouteDispatch:
    def test_zero_duals(self):
        assert reduced_cost_enroute_dispatch(tables(cost=lambda *k: 1.0), DualSolution(), 1, 0, 4, 5)[0] == 1.0

    def test_next_cell_psi(self):
        d = DualSolution(psi={(1, 0, 0, 9): -4.0})
        v, _, b, _ = reduced_cost_enroute_dispatch(tables(cost=lambda *k: 1.0), d, 1, 0, 4, 5)
        assert (v, b) == (-3.0, 0)

    def test_absent_variable(self):
        assert reduced_cost_enroute_dispatch(tables(stations=()), DualSolution(), 1, 0, 4, 5) is None


def random_duals(rng, n_cells=6):
    """Sign-correct duals over every index the tables below touch."""
    d = DualSolution()
    for t in range(1, HORIZON + 1):
        for c in range(N_TYPES):
            for l in range(n_cells):
                d.phi[(t, c, l)] = rng.normal(0, 5)
                d.zeta[(t, c, l)] = abs(rng.normal(0, 2))
        for a in range(2):
            for h in range(N_HOSP):
                d.alpha[(t, a, h)] = rng.normal(0, 5)
            for b in range(N_STATIONS):
                d.beta[(t, a, b)] = rng.normal(0, 5)
                d.gamma[(t, a, b)] = abs(rng.normal(0, 2))
                for cell in range(n_cells):
                    d.psi[(t, a, b, cell)] = rng.normal(0, 5)
                    d.theta[(t, a, b, cell)] = abs(rng.normal(0, 2))
    assert d.sign_ok()
    return d


def random_tables(rng, n_cells=6):
    cost = rng.uniform(0, 10, size=(2, n_cells, n_cells, N_HOSP))
    tau = rng.integers(1, 4, size=(n_cells, n_cells, N_HOSP))
    nxt = rng.integers(0, n_cells, size=(n_cells, N_STATIONS))
    st_cell = rng.integers(0, n_cells, size=N_STATIONS)
    return PricingTables(N_TYPES, HORIZON,
                         cost=lambda c, a, o, l, h: cost[a, o, l, h],
                         tau=lambda c, a, o, l, h: int(tau[o, l, h]),
                         hospitals=lambda c, l: list(range(N_HOSP)),
                         stations_for=lambda t, a, cell: list(range(N_STATIONS)),
                         next_cell=lambda cell, b: int(nxt[cell, b]),
                         station_cell=lambda b: int(st_cell[b]))


def alpha_at(d, tab, t, a, h):
    return d.alpha.get((t, a, h), 0.0) if t <= tab.horizon else 0.0


class TestShortcutsAgainstExhaustiveArgmin:
    @pytest.mark.parametrize("seed", range(100))
    def test_station(self, seed):
        rng = np.random.default_rng(seed)
        tab, d = random_tables(rng), random_duals(rng)
        t, a, b, l = int(rng.integers(1, 5)), int(rng.integers(2)), int(rng.integers(3)), int(rng.integers(6))
        o = tab.station_cell(b)
        full = np.array([[tab.cost(c, a, o, l, h) + d.beta[(t, a, b)]
                          - alpha_at(d, tab, t + tab.tau(c, a, o, l, h), a, h)
                          + d.phi[(t, c, l)] + d.gamma[(t, a, b)] + d.zeta[(t, c, l)]
                          for h in range(N_HOSP)] for c in range(N_TYPES)])
        v, c, h = reduced_cost_station_dispatch(tab, d, t, a, b, l)
        assert (c, h) == np.unravel_index(np.argmin(full), full.shape)
        assert v == pytest.approx(full.min())

    @pytest.mark.parametrize("seed", range(100))
    def test_hospital(self, seed):
        rng = np.random.default_rng(1000 + seed)
        tab, d = random_tables(rng), random_duals(rng)
        t, a, hf, l = int(rng.integers(1, 5)), int(rng.integers(2)), int(rng.integers(6)), int(rng.integers(6))
        full = np.array([[tab.cost(c, a, hf, l, h) + d.alpha.get((t, a, hf), 0.0)
                          - alpha_at(d, tab, t + tab.tau(c, a, hf, l, h), a, h)
                          + d.phi[(t, c, l)] + d.zeta[(t, c, l)]
                          for h in range(N_HOSP)] for c in range(N_TYPES)])
        v, c, h = reduced_cost_hospital_dispatch(tab, d, t, a, hf, l)
        assert (c, h) == np.unravel_index(np.argmin(full), full.shape)
        assert v == pytest.approx(full.min())

    @pytest.mark.parametrize("seed", range(100))
    def test_enroute(self, seed):
        rng = np.random.default_rng(2000 + seed)
        tab, d = random_tables(rng), random_duals(rng)
        t, a, cell, l = int(rng.integers(1, 5)), int(rng.integers(2)), int(rng.integers(6)), int(rng.integers(6))

        def move(b):
            nxt = tab.next_cell(cell, b)
            m = d.beta[(t, a, b)] if nxt == tab.station_cell(b) else d.psi[(t, a, b, nxt)]
            return m + d.theta[(t, a, b, cell)]

        full = np.array([[[tab.cost(c, a, cell, l, h) + move(b)
                           - alpha_at(d, tab, t + tab.tau(c, a, cell, l, h), a, h)
                           + d.phi[(t, c, l)] + d.zeta[(t, c, l)]
                           for h in range(N_HOSP)] for b in range(N_STATIONS)] for c in range(N_TYPES)])
        v, c, b, h = reduced_cost_enroute_dispatch(tab, d, t, a, cell, l)
        assert (c, b, h) == np.unravel_index(np.argmin(full), full.shape)
        assert v == pytest.approx(full.min())


def full_duals(pb, k=0):
    sol = solve_full(pb, k)
    assert sol.status == OPTIMAL
    return sol


class TestOnArcModel:
    def test_scalar_pricing_matches_matrix_reduced_costs(self):
        # a column is comparable when its (type, hospital) is the critical pair
        _, data, post, demand = hand_arc_case()
        pb = build_second_stage(data, [post], demand)
        sol = full_duals(pb)
        duals = DualSolution.from_rows(pb.index.row_keys, sol.duals)
        assert duals.sign_ok()
        rc = reduced_costs(pb, sol.duals)
        tab = arc_pricing_tables(pb)
        cols = pb.index.cols
        checked = 0
        for j in np.flatnonzero(cols["fam"] == XS):
            v, c, h = reduced_cost_station_dispatch(tab, duals, int(cols["t"][j]), int(cols["a"][j]),
                                                    int(cols["b"][j]), int(cols["l"][j]))
            if (c, h) == (cols["c"][j], cols["h"][j]):
                assert v == pytest.approx(rc[j], abs=1e-7)
                checked += 1
        assert checked

    def test_no_columns_at_full_optimum(self):
        _, data, posts, demand = random_arc_case(np.random.default_rng(8))
        pb = build_second_stage(data, posts, demand)
        sol = solve_full(pb)
        if sol.status == OPTIMAL:
            new = generate_columns(pb, np.zeros(pb.index.n_cols, dtype=bool), reduced_costs(pb, sol.duals), 1e-7)
            assert new.size == 0

    def test_first_pass_adds_the_dispatch(self):
        _, data, post, demand = hand_arc_case()
        pb = build_second_stage(data, [post], demand)
        seed = pb.index.cols["fam"] >= Y
        master = solve(pb.variant(0).subset(np.flatnonzero(seed)))
        rc = reduced_costs(pb, master.duals)
        new = generate_columns(pb, seed, rc)
        assert (XS, 1, 2, 0, 0, 1, 1) in {pb.index.col_key(int(j)) for j in new}

    @pytest.mark.parametrize("seed", range(8))
    def test_added_columns_price_negative(self, seed):
        _, data, posts, demand = random_arc_case(np.random.default_rng(300 + seed))
        pb = build_second_stage(data, posts, demand)
        in_master = pb.index.cols["fam"] >= Y
        master = solve(pb.variant(0).subset(np.flatnonzero(in_master)))
        if master.status != OPTIMAL:
            return
        A = pb.lp.matrix.toarray()
        new = generate_columns(pb, in_master, reduced_costs(pb, master.duals))
        dense = pb.lp.cost - A.T @ master.duals
        assert np.all(dense[new] < 0)
        # at most one column per (t, a, call cell)
        keys = {(pb.index.cols["t"][j], pb.index.cols["a"][j], pb.index.cols["l"][j]) for j in new}
        assert len(keys) == len(new)


class TestSolveColgen:
    def test_no_calls(self):
        inst = grid_instance(stations=((0, 1),), ambulances=[0])
        pb = build_second_stage(ArcData(inst, ArcConfig(horizon=2)), [PostDecision(at_station={0: 0})],
                                np.zeros((2, 4, 9), dtype=np.int64))
        res = solve_colgen(pb)
        assert res.solution.objective == 0.0 and res.iterations == 1

    def test_hand_instance_exact(self):
        _, data, post, demand = hand_arc_case()
        pb = build_second_stage(data, [post], demand)
        assert solve_colgen(pb).solution.objective == solve_full(pb).objective

    def test_iteration_cap(self):
        _, data, post, demand = hand_arc_case()
        res = solve_colgen(build_second_stage(data, [post], demand), max_iter=1)
        assert res.solution.status == NUMERICAL and "cap" in res.solution.message

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_direct_solve(self, seed):
        _, data, posts, demand = random_arc_case(np.random.default_rng(500 + seed))
        pb = build_second_stage(data, posts, demand)
        for k in range(len(posts)):
            if not pb.feasible[k]:
                continue
            direct = solve_full(pb, k)
            res = solve_colgen(pb, k)
            assert res.solution.status == direct.status
            if direct.status != OPTIMAL:
                continue
            gap = abs(res.solution.objective - direct.objective) / max(1.0, abs(direct.objective))
            assert gap <= 1e-6
            assert all(b <= a + 1e-7 for a, b in zip(res.history, res.history[1:]))
            # brute-force repricing of the whole universe
            dense = pb.lp.cost - pb.lp.matrix.toarray().T @ res.solution.duals
            assert dense.min() >= -1e-6

    def test_trace(self):
        _, data, post, demand = hand_arc_case()
        lines = []
        solve_colgen(build_second_stage(data, [post], demand), trace=lines.append)
        assert lines and lines[0].startswith("iter 1 obj")
