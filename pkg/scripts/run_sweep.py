"""Fleet-size sweep on the shipped synthetic city; writes comparison tables to --out-dir.

Defaults: all fourteen policies, fleets 10 and 20, four paired replications,
fifteen second-stage scenarios over a two-hour horizon, Friday 18:00-20:00.
"""
import argparse
import time
from pathlib import Path

from ambdispatch.experiment import ExperimentConfig, run_experiment
from ambdispatch.policies import HEURISTICS


def directional_summary(res) -> list[str]:
    table = res.tables["arc"]
    lines = []
    for n in res.config.fleets:
        prt = {p: table.get(n, p)["mean_prt"] for p in res.config.policies}
        basic = {h: prt[h] for h in HEURISTICS if h in prt}
        for opt in ("arc", "itinerary"):
            if opt in prt and basic:
                worse = [h for h, v in basic.items() if prt[opt] > v]
                lines.append(f"fleet {n}: {opt} PRT {prt[opt]:.0f} vs best basic {min(basic.values()):.0f}"
                             f" ({'beats all' if not worse else 'loses to ' + ','.join(worse)})")
        for h in basic:
            r = f"rollout:{h}"
            if r in prt:
                lines.append(f"fleet {n}: {r} {prt[r]:.0f} vs {h} {prt[h]:.0f}")
    return lines


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("results/sweep"))
    ap.add_argument("--fleet", type=int, nargs="+", default=[10, 20])
    ap.add_argument("--replications", type=int, default=4)
    ap.add_argument("--scenarios", type=int, default=15)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=20240)
    args = ap.parse_args()

    cfg = ExperimentConfig(fleets=tuple(args.fleet), replications=args.replications, scenarios=args.scenarios,
                           threads=args.threads, seed=args.seed)
    t0 = time.perf_counter()
    res = run_experiment(cfg, references=["itinerary", "arc"], out_dir=args.out_dir)
    for table in res.tables.values():
        print(table.render())
    print("\n".join(directional_summary(res)))
    print(f"\n{time.perf_counter() - t0:.0f} s; tables in {args.out_dir}")


if __name__ == "__main__":
    main()
