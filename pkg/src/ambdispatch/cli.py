"""Command line: ``ambdispatch {run,horizon-sweep,estimate-rates,latency}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiment import (ConfigError, ExperimentConfig, ReplicationError, horizon_sweep, latency_report,
                         render_rows, run_cells, run_experiment)
from .io import FormatError, load_call_log, load_instance, save_rates, write_results
from .scenarios import WEEK, estimate_rates


def _csv(kind):
    return lambda s: tuple(kind(x) for x in s.split(",") if x)


def _common(p: argparse.ArgumentParser, fleet_default=None):
    p.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    p.add_argument("--seed", type=int)
    p.add_argument("--policies", type=_csv(str), help="comma-separated policy names")
    p.add_argument("--fleet", type=_csv(int), default=fleet_default, help="comma-separated fleet sizes")
    p.add_argument("--replications", type=int)
    p.add_argument("--scenarios", type=int)
    p.add_argument("--horizon", type=float, help="second-stage horizon in seconds")
    p.add_argument("--threads", type=int)
    p.add_argument("--sdiff", choices=("paired", "pooled"))
    p.add_argument("--instance", help="instance JSON (default: shipped synthetic city)")
    p.add_argument("--rates", help="rates CSV (default: shipped)")


def _config(args, **forced) -> ExperimentConfig:
    over = {"seed": args.seed, "policies": args.policies, "fleets": args.fleet,
            "replications": args.replications, "scenarios": args.scenarios, "horizon": args.horizon,
            "threads": args.threads, "sdiff": args.sdiff, "instance": args.instance, "rates": args.rates}
    over.update(forced)
    if args.config is not None:
        return ExperimentConfig.from_file(args.config, **over)
    return ExperimentConfig(**{k: v for k, v in over.items() if v is not None})


def cmd_run(args) -> int:
    cfg = _config(args)
    res = run_experiment(cfg, out_dir=args.out_dir)
    for table in res.tables.values():
        print(table.render())
    print(render_rows(res.latency))
    print(f"results in {args.out_dir}")
    return 0


def cmd_horizon(args) -> int:
    fleet = args.fleet[0] if args.fleet else 20
    pols = args.policies or ("arc", "itinerary")
    cfg = _config(args, policies=pols, fleets=(fleet,))
    rows = horizon_sweep(cfg, tuple(h * 3600.0 for h in args.hours), fleet, pols, out_dir=args.out_dir)
    print(render_rows(rows))
    return 0


def cmd_latency(args) -> int:
    pols = args.policies or ("arc", "itinerary")
    fleets = args.fleet or (30,)
    reps = args.replications or 1
    cfg = _config(args, policies=pols, fleets=fleets, replications=max(2, reps))
    seeds = cfg.seeds()[:reps]
    records = run_cells(cfg, [(cfg, p, n, s) for n in fleets for p in pols for s in seeds])
    rows = latency_report(records)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_results(rows, args.out_dir / "latency.csv")
    print(render_rows(rows))
    return 0


def cmd_estimate(args) -> int:
    inst = load_instance(args.instance)
    calls = load_call_log(args.log, inst.types, inst.geometry.n_cells)
    weeks = args.exposure_weeks
    if weeks is None:
        weeks = max(1.0, float(int(max((c.time for c in calls), default=0.0) // WEEK) + 1))
    model = estimate_rates([c.time for c in calls], [c.ctype for c in calls], [c.cell for c in calls],
                           weeks, len(inst.types.types), inst.geometry.n_cells, args.period)
    save_rates(model, args.out)
    print(f"{len(calls)} calls over {weeks:g} weeks -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ambdispatch", description="Ambulance dispatch experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="paired comparison over fleet sizes")
    _common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("horizon-sweep", help="second-stage horizon sensitivity")
    _common(p)
    p.add_argument("--hours", type=_csv(float), default=(2.0, 3.0, 4.0))
    p.set_defaults(fn=cmd_horizon)

    p = sub.add_parser("latency", help="decision wall-time quantiles")
    _common(p)
    p.set_defaults(fn=cmd_latency)

    p = sub.add_parser("estimate-rates", help="Poisson rate estimates from a call log")
    p.add_argument("--log", type=Path, required=True)
    p.add_argument("--instance", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--exposure-weeks", type=float, help="default: weeks spanned by the log")
    p.add_argument("--period", type=float, default=1800.0)
    p.set_defaults(fn=cmd_estimate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FormatError, ReplicationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
