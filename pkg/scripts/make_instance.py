"""Regenerate the shipped synthetic city and its Friday rate model."""
import argparse
from pathlib import Path

from ambdispatch.io import save_instance, save_rates
from ambdispatch.synthetic import make_instance, make_rates

DATA = Path(__file__).resolve().parents[1] / "src" / "ambdispatch" / "data"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=DATA)
    ap.add_argument("--calls-per-hour", type=float, default=6.0)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    inst = make_instance()
    save_instance(inst, args.out_dir / "rio_like.json")
    save_rates(make_rates(inst, args.calls_per_hour), args.out_dir / "rio_like_rates.csv")
    print(f"wrote {args.out_dir / 'rio_like.json'} and {args.out_dir / 'rio_like_rates.csv'}")


if __name__ == "__main__":
    main()
