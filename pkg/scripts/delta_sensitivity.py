"""Mean age of the fully-distributed scheme as a function of the window length.

Prints simulation against the finite-n expression for a grid of delta * lambda.
"""

import argparse

import numpy as np

from timely_gossip import analytics
from timely_gossip.core import PolicyKind, SimConfig, derive_seed
from timely_gossip.engine import run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--ratio", type=float, default=1.0)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--horizon", type=float, default=1e4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'delta':>6} {'sim':>8} {'stderr':>7} {'theory':>8} {'asym':>8}")
    for delta in (0.125, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0):
        ages = [
            run(SimConfig(n=args.n, lambda_e=args.ratio, lam=1.0, policy=PolicyKind.FULLY_DISTRIBUTED,
                          horizon=args.horizon, delta=delta, seed=derive_seed(args.seed, k))).mean_age
            for k in range(args.trials)
        ]
        theory = analytics.fully_distributed_mean_age(args.n, args.ratio, 1.0, float(args.n), delta)
        asym = analytics.fully_distributed_asymptote(args.ratio, 1.0, delta)
        se = np.std(ages, ddof=1) / np.sqrt(len(ages))
        print(f"{delta:>6g} {np.mean(ages):>8.4f} {se:>7.4f} {theory:>8.4f} {asym:>8.4f}")


if __name__ == "__main__":
    main()
