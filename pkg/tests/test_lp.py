import numpy as np
import pytest

from ambdispatch.lp import (INFEASIBLE, NUMERICAL, OPTIMAL, UNBOUNDED, LinearProgram, LpError, check_certificate,
                            dump, solve, solve_with, vertex_enumeration_oracle)

from factories import random_lp


def lp(cost, A, b, eq=None, upper=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    eq = np.zeros(len(b), dtype=bool) if eq is None else eq
    return LinearProgram(np.asarray(cost, dtype=float), A, np.asarray(b, dtype=float), eq, upper)


SINGLE = lp([1.0], [[0.0]], [0.0])                # min x, x >= 0
PAIR = lp([-1.0, -1.0], [[1.0, 1.0]], [1.0])       # min -x-y, x+y <= 1


class TestExamples:
    def test_min_x(self):
        s = solve(SINGLE)
        assert s.status == OPTIMAL and s.objective == 0.0

    def test_hand_duality(self):
        s = solve(PAIR)
        assert s.objective == pytest.approx(-1.0)
        assert s.duals[0] == pytest.approx(-1.0)
        assert check_certificate(PAIR, s) == []

    def test_oracle_reproduces(self):
        assert vertex_enumeration_oracle(SINGLE).objective == 0.0
        assert vertex_enumeration_oracle(PAIR).objective == pytest.approx(-1.0)

    def test_infeasible(self):
        bad = lp([1.0], [[1.0]], [-1.0])
        assert solve(bad).status == INFEASIBLE
        assert vertex_enumeration_oracle(bad).status == INFEASIBLE

    def test_unbounded(self):
        ray = lp([-1.0, 0.0], [[0.0, 1.0]], [1.0])
        assert solve(ray).status == UNBOUNDED
        assert vertex_enumeration_oracle(ray).status == UNBOUNDED

    def test_duplicated_equality_row(self):
        A = [[1.0, 2.0, 1.0], [1.0, 2.0, 1.0], [0.0, 1.0, -1.0]]
        deg = lp([2.0, 1.0, 3.0], A, [4.0, 4.0, 0.0], eq=np.array([True, True, False]))
        s, o = solve(deg), vertex_enumeration_oracle(deg)
        assert s.status == OPTIMAL and o.status == OPTIMAL
        assert s.objective == pytest.approx(o.objective, abs=1e-8)
        assert check_certificate(deg, s) == []

    def test_upper_bounds(self):
        boxed = lp([-1.0, -2.0], [[1.0, 1.0]], [3.0], upper=np.array([np.inf, 1.0]))
        s = solve(boxed)
        assert s.objective == pytest.approx(-4.0)
        assert s.x == pytest.approx([2.0, 1.0])

    def test_offset_carried(self):
        s = solve(LinearProgram(SINGLE.cost, SINGLE.matrix, SINGLE.rhs, SINGLE.is_eq, offset=5.0))
        assert s.objective == 5.0

    def test_oracle_refuses_large(self):
        big = lp(np.ones(8), np.ones((5, 8)), np.ones(5))
        with pytest.raises(ValueError):
            vertex_enumeration_oracle(big)


class TestRandom:
    @pytest.mark.parametrize("seed", range(60))
    def test_simplex_matches_oracle(self, seed):
        prob = random_lp(np.random.default_rng(seed))
        s, o = solve(prob), vertex_enumeration_oracle(prob)
        assert s.status != NUMERICAL
        assert s.status == o.status
        if o.status == OPTIMAL:
            assert s.objective == pytest.approx(o.objective, abs=1e-8)
            assert check_certificate(prob, s, tol=1e-9) == []

    @pytest.mark.parametrize("seed", range(20))
    def test_reduced_costs(self, seed):
        prob = random_lp(np.random.default_rng(1000 + seed))
        s = solve(prob)
        if s.status != OPTIMAL:
            return
        basic = (s.x > 1e-9) & (s.x < prob.upper - 1e-9)
        assert np.all(np.abs(s.reduced[basic]) < 1e-7)
        interior = s.x < prob.upper - 1e-9
        assert np.all(s.reduced[interior] >= -1e-7)

    @pytest.mark.parametrize("seed", range(20))
    def test_highs_agrees(self, seed):
        prob = random_lp(np.random.default_rng(2000 + seed))
        s, h = solve(prob), solve_with(prob, "highs")
        if s.status == OPTIMAL:
            assert h.status == OPTIMAL
            assert h.objective == pytest.approx(s.objective, abs=1e-7)

    def test_deterministic(self):
        prob = random_lp(np.random.default_rng(3))
        a, b = solve(prob), solve(prob)
        assert np.array_equal(a.x, b.x) and a.iterations == b.iterations


class TestContainer:
    def test_shape_mismatch(self):
        with pytest.raises(LpError):
            lp([1.0, 2.0], [[1.0]], [1.0])

    def test_nonfinite(self):
        with pytest.raises(LpError):
            lp([np.nan], [[1.0]], [1.0])

    def test_triplet_out_of_range(self):
        with pytest.raises(LpError):
            LinearProgram.from_triplets([1.0], [1], [0], [1.0], [1.0], [False])

    def test_unknown_engine(self):
        with pytest.raises(ValueError):
            solve_with(PAIR, "cplex")

    def test_dump_format(self):
        named = LinearProgram.from_triplets([-1.0, -1.0], [0, 0], [0, 1], [1.0, 1.0], [1.0], [False],
                                            upper=[np.inf, 2.0], col_names=["x", "y"], row_names=["cap"])
        assert dump(named) == ("LP 1 rows 2 cols offset 0\n"
                               "MIN\n  -1 x\n  -1 y\n"
                               "ROWS\n  cap: +1 x +1 y <= 1\n"
                               "BOUNDS\n  0 <= y <= 2\n"
                               "END\n")
