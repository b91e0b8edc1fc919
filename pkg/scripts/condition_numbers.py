"""Compare the three condition numbers and the contraction factor across environments.

    python3 scripts/condition_numbers.py --instances 20
"""
import argparse

import numpy as np

from avgtd import FeatureMap, analyze, spectral_report
from avgtd.harness import EnvironmentSpec, generate_environment, generate_features

ENVS = [
    ("random_walk(10)", EnvironmentSpec("random_walk", n=10), None),
    ("random_walk(50)", EnvironmentSpec("random_walk", n=50), None),
    ("gridworld(5x5)", EnvironmentSpec("gridworld", w=5, h=5), 0.2),
    ("random_mdp(30, 0.8)", EnvironmentSpec("random_mdp", n=30, sparsity=0.8), 0.1),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=10, help="feature draws per environment")
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'environment':<22s} {'features':<10s} {'eta1':>10s} {'eta2':>10s} {'eta3':>10s} {'omega':>7s} "
          f"{'eta1/eta3':>9s}")
    for name, spec, eps in ENVS:
        chain = generate_environment(spec, eps, rng)
        a = analyze(chain)
        rows = [("tabular", spectral_report(FeatureMap.tabular(chain.n), chain, a))]
        for _ in range(args.instances):
            rows.append(("linear", spectral_report(generate_features(chain, a, args.d, 0.5, rng), chain, a)))
        for kind in ("tabular", "linear"):
            reps = [r for k, r in rows if k == kind]
            med = {f: float(np.median([getattr(r, f) for r in reps])) for f in ("eta1", "eta2", "eta3", "omega")}
            ratio = float(np.median([r.eta1 / r.eta3 for r in reps]))
            print(f"{name:<22s} {kind:<10s} {med['eta1']:10.3e} {med['eta2']:10.3e} {med['eta3']:10.3e} "
                  f"{med['omega']:7.4f} {ratio:9.2f}")


if __name__ == "__main__":
    main()
