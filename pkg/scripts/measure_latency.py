"""Decision wall-time quantiles (ms) for the two optimization policies at several fleet sizes."""
import argparse
from pathlib import Path

from ambdispatch.experiment import ExperimentConfig, latency_report, render_rows, run_cells
from ambdispatch.io import write_results


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fleet", type=int, nargs="+", default=[10, 20, 30])
    ap.add_argument("--policies", nargs="+", default=["arc", "itinerary"])
    ap.add_argument("--scenarios", type=int, default=15)
    ap.add_argument("--out", type=Path, default=Path("results/latency.csv"))
    args = ap.parse_args()

    cfg = ExperimentConfig(policies=tuple(args.policies), fleets=tuple(args.fleet), replications=2,
                           scenarios=args.scenarios)
    seed = cfg.seeds()[0]
    records = run_cells(cfg, [(cfg, p, n, seed) for n in cfg.fleets for p in cfg.policies])
    rows = latency_report(records)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_results(rows, args.out)
    print(render_rows(rows))


if __name__ == "__main__":
    main()
