"""Run the three-ratio comparison grid and write CSV plus per-ratio plot series.

    python3 scripts/reproduce_fig3.py --out results/fig3 [--trials 10] [--horizon 4e4]
"""

import argparse
from pathlib import Path

from timely_gossip.harness import emit_csv, emit_plot_data, fig3_spec, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/fig3"))
    ap.add_argument("--trials", type=int)
    ap.add_argument("--horizon", type=float)
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()

    overrides = {k: v for k, v in vars(args).items() if k != "out" and v is not None}
    result = run_sweep(fig3_spec(**overrides))
    emit_csv(result, args.out / "sweep.csv")
    emit_plot_data(result, args.out)

    for ratio in sorted({p.ratio for p in result.points}):
        print(f"lambda_e/lambda = {ratio:g}")
        print(f"  {'n':>5} " + " ".join(f"{k.value:>16}" for k in result.spec.policies))
        for n in result.spec.n_values:
            cells = (result.point(k, n, ratio) for k in result.spec.policies)
            print(f"  {n:>5} " + " ".join(f"{p.mean_age:>9.4f}±{p.stderr:<6.4f}" for p in cells))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
