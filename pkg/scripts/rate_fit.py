"""Fit empirical convergence rates of every learner on one experiment config.

Runs the config (or reuses an existing output directory), then regresses
log mean squared error on log t over a window and prints one row per algorithm.

    python3 scripts/rate_fit.py configs/random_walk5_tabular.json
    python3 scripts/rate_fit.py --from-dir runs/random_walk5_tabular --metric err_mod_const
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from avgtd.harness import load_config, run_experiment
from avgtd.harness.experiment import METRICS


def read_runs(out_dir: Path, metric: str) -> dict[str, dict[int, np.ndarray]]:
    """algorithm -> {t: per-seed metric values}."""
    col = 3 + METRICS.index(metric)
    table: dict[str, dict[int, list]] = {}
    for path in sorted((out_dir / "runs").glob("*.csv")):
        with open(path, encoding="utf-8") as fh:
            rows = list(csv.reader(fh))[1:]
        for row in rows:
            if row[col]:
                table.setdefault(row[2], {}).setdefault(int(row[0]), []).append(float(row[col]))
    return {alg: {t: np.array(v) for t, v in by_t.items()} for alg, by_t in table.items()}


def fit(by_t: dict[int, np.ndarray], lo: float, hi: float) -> tuple[float, float, float]:
    t = np.array(sorted(k for k in by_t if lo <= k <= hi))
    mse = np.array([np.mean(by_t[k] ** 2) for k in t])
    slope = np.polyfit(np.log(t), np.log(mse), 1)[0]
    return float(slope), float(mse[0]), float(mse[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", nargs="?")
    ap.add_argument("--from-dir", type=Path)
    ap.add_argument("--out", type=Path)
    ap.add_argument("--metric", default="err_param", choices=METRICS)
    ap.add_argument("--window", type=float, nargs=2, default=(1e4, np.inf), metavar=("LO", "HI"))
    args = ap.parse_args()
    if args.from_dir is None and args.config is None:
        ap.error("give a config or --from-dir")
    out_dir = args.from_dir
    if out_dir is None:
        cfg = load_config(args.config)
        out_dir = args.out or Path(cfg.out or Path("runs") / Path(args.config).stem)
        run_experiment(cfg, out_dir)
    lo, hi = args.window
    print(f"{'algorithm':<32s} {'slope':>8s} {'mse(lo)':>12s} {'mse(T)':>12s}   ({args.metric}, t in [{lo:g}, {hi:g}])")
    for alg, by_t in read_runs(out_dir, args.metric).items():
        s, first, last = fit(by_t, lo, hi)
        print(f"{alg:<32s} {s:8.3f} {first:12.4e} {last:12.4e}")


if __name__ == "__main__":
    main()
