"""Paired comparison experiments: fleet sweeps, SDIFF tables, horizon sweeps and latency reports.

Every policy sees the same replication seeds, so for a given (fleet, seed)
all policies face identical calls and identical travel/service uniforms.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .io import load_instance, load_rates, write_results
from .policies import POLICY_NAMES, TwoStageConfig, make_policy
from .scenarios import FRIDAY, week_time
from .sim import InfeasibleDecision, run_replication

DEFAULT_WINDOW = (week_time(FRIDAY, 18), week_time(FRIDAY, 20))
SDIFF_MODES = ("paired", "pooled")


class ConfigError(ValueError):
    pass


class ReplicationError(RuntimeError):
    """A replication failed; carries the policy, seed and the event that broke it."""

    def __init__(self, policy: str, fleet: int, seed: int, event: str):
        super().__init__(f"policy={policy} fleet={fleet} seed={seed}: {event}")
        self.policy, self.fleet, self.seed, self.event = policy, fleet, seed, event


@dataclass
class ExperimentConfig:
    instance: str | None = None           # JSON instance; None uses the shipped synthetic city
    rates: str | None = None              # rates CSV; None uses the shipped one
    policies: tuple = POLICY_NAMES
    fleets: tuple = (10, 20)              # ambulances = stations
    replications: int = 4
    scenarios: int = 15
    horizon: float = 7200.0
    period: float = 1800.0
    window: tuple = DEFAULT_WINDOW
    seed: int = 20240
    threads: int = 1
    sdiff: str = "paired"

    def __post_init__(self):
        self.policies = tuple(self.policies)
        self.fleets = tuple(int(f) for f in self.fleets)
        self.window = tuple(float(w) for w in self.window)
        if self.replications < 2:
            raise ConfigError("need at least 2 replications for SDIFF")
        if self.scenarios < 1:
            raise ConfigError("need at least one second-stage scenario")
        if self.period <= 0 or self.horizon <= 0 or self.horizon % self.period:
            raise ConfigError(f"period {self.period} must divide horizon {self.horizon}")
        if len(self.window) != 2 or not self.window[0] < self.window[1]:
            raise ConfigError("window must be (start, end) with start < end")
        if not self.policies or not self.fleets:
            raise ConfigError("need at least one policy and one fleet size")
        unknown = [p for p in self.policies if p not in POLICY_NAMES]
        if unknown:
            raise ConfigError(f"unknown policies {unknown}")
        if self.sdiff not in SDIFF_MODES:
            raise ConfigError(f"sdiff must be one of {SDIFF_MODES}")
        if self.threads < 1:
            raise ConfigError("threads must be positive")

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        d = json.loads(Path(path).read_text())
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1)

    def seeds(self) -> list[int]:
        return [int(s) for s in np.random.SeedSequence(self.seed).generate_state(self.replications)]

    def two_stage(self) -> TwoStageConfig:
        return TwoStageConfig(scenarios=self.scenarios, horizon=self.horizon, period=self.period)


def _data_path(name: str) -> str:
    return str(resources.files("ambdispatch") / "data" / name)


@lru_cache(maxsize=8)
def load_setting(instance: str | None, rates: str | None):
    inst = load_instance(instance or _data_path("rio_like.json"))
    model = load_rates(rates or _data_path("rio_like_rates.csv"))
    return inst, model


# --------------------------------------------------------------------------
# statistics


def sdiff(ref, other, mode: str = "paired") -> float:
    """(mean(ref) - mean(other)) / standard error of the difference.

    Negative when the reference has the lower (better) mean.  ``paired``
    uses the sample deviation of per-replication differences; ``pooled``
    treats the two samples as independent.  Zero spread gives a signed
    infinity (or 0 when the means agree).
    """
    ref, other = np.asarray(ref, dtype=float), np.asarray(other, dtype=float)
    if mode not in SDIFF_MODES:
        raise ValueError(f"mode must be one of {SDIFF_MODES}")
    if mode == "paired" and ref.shape != other.shape:
        raise ValueError("paired samples must have equal length")
    if len(ref) < 2 or len(other) < 2:
        raise ValueError("need at least two samples")
    gap = float(ref.mean() - other.mean())
    if mode == "paired":
        d = ref - other
        se = float(d.std(ddof=1)) / math.sqrt(len(d))
    else:
        se = math.sqrt(ref.var(ddof=1) / len(ref) + other.var(ddof=1) / len(other))
    if se <= 1e-12 * max(1.0, abs(gap)):
        return 0.0 if gap == 0 else math.copysign(math.inf, gap)
    return gap / se


def format_sdiff(x: float) -> str:
    return ("-inf" if x < 0 else "inf") if math.isinf(x) else f"{x:.1f}"


# --------------------------------------------------------------------------
# replications


@dataclass
class RunRecord:
    policy: str
    fleet: int
    seed: int
    mean_rt: float
    mean_prt: float
    arrivals: int
    unserved: int
    latencies: list = field(default_factory=list)


def run_one(config: ExperimentConfig, policy: str, fleet: int, seed: int,
            horizon: float | None = None) -> RunRecord:
    inst, rates = load_setting(config.instance, config.rates)
    inst = inst.with_fleet(fleet)
    ts = config.two_stage()
    if horizon is not None:
        ts = TwoStageConfig(scenarios=ts.scenarios, horizon=horizon, period=ts.period)
    pol = make_policy(policy, inst, rates, config.window, ts)
    try:
        m = run_replication(inst, rates, pol, config.window, seed)
    except InfeasibleDecision as e:
        raise ReplicationError(policy, fleet, seed, str(e)) from e
    except Exception as e:   # surface the failing cell, keep the cause chained
        raise ReplicationError(policy, fleet, seed, f"{type(e).__name__}: {e}") from e
    return RunRecord(policy, fleet, seed, m.mean_rt, m.mean_prt, m.arrivals,
                     m.queued_at_end, list(m.latencies))


def _run_task(args):
    return run_one(*args)


def run_cells(config: ExperimentConfig, tasks: list[tuple]) -> list[RunRecord]:
    """Run (config, policy, fleet, seed[, horizon]) cells, in a process pool when threads > 1."""
    if config.threads == 1 or len(tasks) == 1:
        return [run_one(*t) for t in tasks]
    with ProcessPoolExecutor(config.threads) as pool:
        return list(pool.map(_run_task, tasks))


# --------------------------------------------------------------------------
# tables


@dataclass
class ComparisonTable:
    reference: str
    metric_rows: list          # dicts: fleet, policy, mean_rt, mean_prt, sdiff_rt, sdiff_prt
    mode: str = "paired"

    def rows(self) -> list[dict]:
        return list(self.metric_rows)

    def get(self, fleet: int, policy: str) -> dict:
        return next(r for r in self.metric_rows if r["fleet"] == fleet and r["policy"] == policy)

    def render(self) -> str:
        fleets = sorted({r["fleet"] for r in self.metric_rows})
        pols = list(dict.fromkeys(r["policy"] for r in self.metric_rows))
        w = max(12, *(len(p) + 2 for p in pols))
        lines = [f"reference: {self.reference}   (SDIFF {self.mode}; negative = reference better)"]
        lines.append("fleet  " + "".join(f"{p:>{w}}" for p in pols))
        for n in fleets:
            for key, label in (("mean_rt", "RT"), ("sdiff_rt", "SDIFF"), ("mean_prt", "PRT"), ("sdiff_prt", "SDIFF")):
                cells = []
                for p in pols:
                    v = self.get(n, p)[key]
                    cells.append(format_sdiff(v) if key.startswith("sdiff") else f"{v:.1f}")
                lines.append(f"{n if label == 'RT' else '':<3}{label:>6}" + "".join(f"{c:>{w}}" for c in cells))
        return "\n".join(lines) + "\n"


def comparison_table(records: list[RunRecord], reference: str, mode: str = "paired") -> ComparisonTable:
    by = {}
    for r in records:
        by.setdefault((r.fleet, r.policy), []).append(r)
    for v in by.values():
        v.sort(key=lambda r: r.seed)
    fleets = sorted({f for f, _ in by})
    pols = list(dict.fromkeys(r.policy for r in records))
    rows = []
    for n in fleets:
        if (n, reference) not in by:
            raise ConfigError(f"reference {reference!r} missing for fleet {n}")
        ref = by[n, reference]
        for p in pols:
            cur = by[n, p]
            rt, prt = [r.mean_rt for r in cur], [r.mean_prt for r in cur]
            rows.append({
                "fleet": n, "policy": p, "mean_rt": float(np.mean(rt)), "mean_prt": float(np.mean(prt)),
                "sdiff_rt": sdiff([r.mean_rt for r in ref], rt, mode),
                "sdiff_prt": sdiff([r.mean_prt for r in ref], prt, mode),
            })
    return ComparisonTable(reference, rows, mode)


def latency_report(records: list[RunRecord]) -> list[dict]:
    """Per (fleet, policy): 0.1-quantile, mean and 0.9-quantile of decision wall time in ms."""
    by = {}
    for r in records:
        by.setdefault((r.fleet, r.policy), []).extend(r.latencies)
    out = []
    for (n, p), lat in by.items():
        ms = np.asarray(lat) * 1e3
        q10, q90 = (np.quantile(ms, [0.1, 0.9]) if len(ms) else (math.nan, math.nan))
        out.append({"fleet": n, "policy": p, "decisions": len(ms), "q10_ms": float(q10),
                    "mean_ms": float(ms.mean()) if len(ms) else math.nan, "q90_ms": float(q90)})
    return out


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    tables: dict               # reference name -> ComparisonTable
    latency: list

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for ref, table in self.tables.items():
            stem = f"compare_{ref.replace(':', '-')}"
            write_results(table.rows(), out / f"{stem}.csv")
            (out / f"{stem}.txt").write_text(table.render())
            paths += [out / f"{stem}.csv", out / f"{stem}.txt"]
        write_results(self.latency, out / "latency.csv")
        write_results([{k: v for k, v in asdict(r).items() if k != "latencies"} for r in self.records],
                      out / "replications.csv")
        (out / "config.json").write_text(self.config.to_json() + "\n")
        return paths + [out / "latency.csv", out / "replications.csv", out / "config.json"]


def default_references(policies) -> list[str]:
    refs = [p for p in ("itinerary", "arc") if p in policies]
    return refs or [policies[0]]


def run_experiment(config: ExperimentConfig, references: list[str] | None = None,
                   out_dir=None) -> ExperimentResult:
    seeds = config.seeds()
    tasks = [(config, p, n, s) for n in config.fleets for p in config.policies for s in seeds]
    records = run_cells(config, tasks)
    refs = references or default_references(config.policies)
    tables = {ref: comparison_table(records, ref, config.sdiff) for ref in refs}
    result = ExperimentResult(config, records, tables, latency_report(records))
    if out_dir is not None:
        result.write(out_dir)
    return result


# --------------------------------------------------------------------------
# horizon sensitivity


def horizon_sweep(config: ExperimentConfig, horizons=(7200.0, 10800.0, 14400.0), fleet: int = 20,
                  policies=("arc", "itinerary"), out_dir=None) -> list[dict]:
    """One row per horizon: RT/PRT per policy and SDIFF against the first horizon."""
    horizons = [float(h) for h in horizons]
    for h in horizons:
        if h <= 0 or h % config.period:
            raise ConfigError(f"period {config.period} must divide horizon {h}")
    seeds = config.seeds()
    tasks = [(config, p, fleet, s, h) for h in horizons for p in policies for s in seeds]
    records = run_cells(config, tasks)
    by = {}
    for (_, p, _, s, h), r in zip(tasks, records):
        by.setdefault((h, p), []).append(r)
    rows = []
    for h in horizons:
        row = {"horizon_h": h / 3600.0, "fleet": fleet}
        for p in policies:
            cur, base = by[h, p], by[horizons[0], p]
            row[f"{p}_rt"] = float(np.mean([r.mean_rt for r in cur]))
            row[f"{p}_prt"] = float(np.mean([r.mean_prt for r in cur]))
            row[f"{p}_sdiff_prt"] = sdiff([r.mean_prt for r in base], [r.mean_prt for r in cur], config.sdiff)
        rows.append(row)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_results(rows, out / "horizon_sweep.csv")
        (out / "horizon_sweep.txt").write_text(render_rows(rows))
    return rows


def render_rows(rows: list[dict]) -> str:
    if not rows:
        return "(empty)\n"
    keys = list(rows[0])

    def cell(k, v):
        if isinstance(v, float):
            return format_sdiff(v) if "sdiff" in k else f"{v:.2f}"
        return str(v)

    text = [[cell(k, r[k]) for k in keys] for r in rows]
    w = [max(len(k), *(len(t[i]) for t in text)) + 2 for i, k in enumerate(keys)]
    lines = ["".join(f"{k:>{w[i]}}" for i, k in enumerate(keys))]
    lines += ["".join(f"{c:>{w[i]}}" for i, c in enumerate(t)) for t in text]
    return "\n".join(lines) + "\n"


__all__ = ["ExperimentConfig", "ConfigError", "ReplicationError", "sdiff", "format_sdiff", "RunRecord",
           "run_one", "run_cells", "ComparisonTable", "comparison_table", "latency_report",
           "ExperimentResult", "run_experiment", "horizon_sweep", "render_rows", "DEFAULT_WINDOW"]
