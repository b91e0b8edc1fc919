"""Print final and checkpoint errors per algorithm from an output directory's aggregate.csv.

    python3 scripts/summarize.py runs/random_walk5_tabular
"""
import argparse
import csv
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--checkpoints", type=int, nargs="*", default=[1000, 10000, 100000])
    args = ap.parse_args()
    with open(args.out_dir / "aggregate.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    by_alg: dict[str, list[dict]] = {}
    for row in rows:
        by_alg.setdefault(row["algorithm"], []).append(row)
    for alg, alg_rows in by_alg.items():
        print(alg)
        marks = set(args.checkpoints) | {int(alg_rows[-1]["t"])}
        for row in alg_rows:
            if int(row["t"]) in marks:
                print(f"  t={int(row['t']):>8d}  err_param {float(row['err_param_mean']):.4e} "
                      f"+- {float(row['err_param_std']):.1e}   err_mod_const {float(row['err_mod_const_mean']):.4e}")


if __name__ == "__main__":
    main()
