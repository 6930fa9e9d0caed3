import dataclasses
import math

import numpy as np
import pytest

from ambdispatch import experiment
from ambdispatch.experiment import (ConfigError, ExperimentConfig, ReplicationError, RunRecord, comparison_table,
                                    format_sdiff, horizon_sweep, latency_report, run_experiment, run_one, sdiff)
from ambdispatch.io import read_results, save_instance, save_rates
from ambdispatch.scenarios import RateModel

from factories import grid_instance, uniform_rates


@pytest.fixture
def small(tmp_path):
    inst = grid_instance(3, 3, km=4.0, stations=((0, 1), (4, 1), (8, 1)), hospitals=(4,), ambulances=[0, 1, 2])
    save_instance(inst, tmp_path / "inst.json")
    save_rates(uniform_rates(4, 9, 6.0), tmp_path / "rates.csv")
    save_rates(RateModel(np.zeros((336, 4, 9))), tmp_path / "zero.csv")
    return tmp_path


def config(small, rates="rates.csv", **kw):
    base = dict(instance=str(small / "inst.json"), rates=str(small / rates), policies=("closest", "jagtenberg"),
                fleets=(2, 3), replications=3, scenarios=2)
    base.update(kw)
    return ExperimentConfig(**base)


class TestSdiff:
    def test_hand_example(self):
        assert sdiff([10, 12], [13, 17]) == pytest.approx(-4.0)

    def test_pooled_example(self):
        # variances 2 and 8, two samples each
        assert sdiff([10, 12], [13, 17], "pooled") == pytest.approx(-4.0 / math.sqrt(5.0))

    def test_identical(self):
        assert sdiff([3.0, 5.0, 9.0], [3.0, 5.0, 9.0]) == 0.0

    def test_zero_spread_is_signed_infinity(self):
        other = np.array([4.0, 7.0, 1.0])
        assert sdiff(other + 10, other) == math.inf
        assert sdiff(other - 10, other) == -math.inf
        assert format_sdiff(-math.inf) == "-inf" and format_sdiff(math.inf) == "inf"

    def test_antisymmetric(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=6), rng.normal(size=6)
        assert sdiff(a, b) == pytest.approx(-sdiff(b, a))

    def test_errors(self):
        with pytest.raises(ValueError):
            sdiff([1.0], [2.0])
        with pytest.raises(ValueError):
            sdiff([1.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            sdiff([1.0, 2.0], [1.0, 2.0], "welch")


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(replications=1), dict(scenarios=0), dict(horizon=7000.0),
                                    dict(window=(10.0, 5.0)), dict(policies=("nearest",)), dict(fleets=()),
                                    dict(sdiff="welch"), dict(threads=0)])
    def test_rejected(self, kw):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw)

    def test_defaults(self):
        c = ExperimentConfig()
        assert (c.replications, c.scenarios, c.horizon, c.period, c.fleets) == (4, 15, 7200.0, 1800.0, (10, 20))
        assert c.window == (4 * 86400 + 18 * 3600.0, 4 * 86400 + 20 * 3600.0)

    def test_file_round_trip(self, tmp_path):
        c = ExperimentConfig(policies=("arc", "closest"), fleets=(5,), seed=7)
        (tmp_path / "c.json").write_text(c.to_json())
        assert ExperimentConfig.from_file(tmp_path / "c.json") == c
        assert ExperimentConfig.from_file(tmp_path / "c.json", seed=9).seed == 9

    def test_unknown_key(self, tmp_path):
        (tmp_path / "c.json").write_text('{"replicas": 3}')
        with pytest.raises(ConfigError, match="replicas"):
            ExperimentConfig.from_file(tmp_path / "c.json")


def fake_records(values: dict):
    return [RunRecord(p, n, s, v, v, 0, 0) for (p, n), vs in values.items() for s, v in enumerate(vs)]


class TestTables:
    def test_self_comparison_is_zero(self, small):
        res = run_experiment(config(small))
        twin = [dataclasses.replace(r, policy="twin") for r in res.records if r.policy == "closest"]
        table = comparison_table(res.records + twin, "closest")
        for n in (2, 3):
            assert table.get(n, "closest")["sdiff_prt"] == 0.0
            assert table.get(n, "twin")["sdiff_prt"] == 0.0

    def test_worse_reference_gives_positive(self):
        rng = np.random.default_rng(2)
        base = rng.uniform(100, 200, 4)
        recs = fake_records({("ref", 10): base + 50 + rng.normal(0, 1, 4),
                             ("a", 10): base, ("b", 10): base + rng.normal(0, 5, 4)})
        table = comparison_table(recs, "ref")
        assert table.get(10, "a")["sdiff_prt"] > 0 and table.get(10, "b")["sdiff_prt"] > 0

    def test_missing_reference(self):
        with pytest.raises(ConfigError):
            comparison_table(fake_records({("a", 10): [1.0, 2.0]}), "arc")

    def test_render_marks_infinity(self):
        recs = fake_records({("ref", 10): [1.0, 2.0], ("a", 10): [3.0, 4.0]})
        assert "inf" in comparison_table(recs, "ref").render()

    def test_latency_quantiles(self):
        recs = [RunRecord("p", 10, 0, 0.0, 0.0, 0, 0, latencies=[i / 1000 for i in range(1, 11)])]
        (row,) = latency_report(recs)
        assert row["mean_ms"] == pytest.approx(5.5)
        assert row["q10_ms"] == pytest.approx(np.quantile(np.arange(1, 11), 0.1))
        assert row["q90_ms"] == pytest.approx(np.quantile(np.arange(1, 11), 0.9))


class TestRuns:
    def test_paired_design(self, small):
        cfg = config(small)
        seed = cfg.seeds()[0]
        a, b = run_one(cfg, "closest", 3, seed), run_one(cfg, "jagtenberg", 3, seed)
        assert a.arrivals == b.arrivals > 0

    def test_reproducible_outputs(self, small, tmp_path):
        cfg = config(small)
        run_experiment(cfg, out_dir=tmp_path / "a")
        run_experiment(cfg, out_dir=tmp_path / "b")
        for name in ("compare_closest.csv", "replications.csv", "config.json"):
            assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()

    def test_zero_rate_window(self, small, tmp_path):
        res = run_experiment(config(small, rates="zero.csv"), out_dir=tmp_path)
        assert all(r.mean_prt == 0.0 and r.mean_rt == 0.0 and r.arrivals == 0 for r in res.records)
        assert {(r["fleet"], r["policy"]) for r in read_results(tmp_path / "latency.csv")} == \
            {(str(n), p) for n in (2, 3) for p in ("closest", "jagtenberg")}

    def test_default_reference_and_outputs(self, small, tmp_path):
        res = run_experiment(config(small, policies=("closest", "arc"), fleets=(3,), replications=2),
                             out_dir=tmp_path)
        assert list(res.tables) == ["arc"]
        rows = read_results(tmp_path / "compare_arc.csv")
        assert [r["policy"] for r in rows] == ["closest", "arc"]
        assert (tmp_path / "compare_arc.txt").read_text().startswith("reference: arc")

    def test_fault_names_the_cell(self, small, monkeypatch):
        class Broken:
            name = "closest"

            def select(self, state, call):
                raise RuntimeError("boom")

        monkeypatch.setattr(experiment, "make_policy", lambda *a, **k: Broken())
        cfg = config(small)
        with pytest.raises(ReplicationError) as e:
            run_one(cfg, "closest", 3, 17)
        assert (e.value.policy, e.value.fleet, e.value.seed) == ("closest", 3, 17) and "boom" in e.value.event


class TestHorizonSweep:
    def test_row_per_horizon(self, small, tmp_path):
        cfg = config(small, replications=2, scenarios=1)
        rows = horizon_sweep(cfg, (1800.0, 3600.0, 5400.0), fleet=3, out_dir=tmp_path)
        assert [r["horizon_h"] for r in rows] == [0.5, 1.0, 1.5]
        assert rows[0]["arc_sdiff_prt"] == 0.0 and rows[0]["itinerary_sdiff_prt"] == 0.0
        assert len(read_results(tmp_path / "horizon_sweep.csv")) == 3

    def test_horizon_must_be_whole_periods(self, small):
        with pytest.raises(ConfigError):
            horizon_sweep(config(small), (7200.0, 9000.5), fleet=3)
