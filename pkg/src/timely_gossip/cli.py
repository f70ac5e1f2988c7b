"""Command-line entry point: ``timely-gossip <subcommand> ...``.

Failures print one line ``error[<Category>]: <message>`` on stderr.  Exit
status is 2 for usage and configuration errors, 1 for anything else
(including a failed queue check).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analytics
from .core import ConfigError, GossipError, PolicyKind, SimConfig, validate_config
from .engine import run
from .harness import (
    emit_csv,
    emit_plot_data,
    fig3_spec,
    parse_config_file,
    run_sweep,
    spec_from_settings,
)
from .queue import queue_check


def _policy(text):
    try:
        return PolicyKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _policy_list(text):
    return tuple(_policy(x) for x in text.split(","))


def _delta(text):
    if text.strip().lower() == "optimal":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'optimal', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="timely-gossip", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trial and print its summary")
    p.add_argument("--policy", type=_policy, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda-e", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--B", dest="capacity", type=float, default=None, help="gossip capacity (default n*lambda)")
    p.add_argument("--delta", type=_delta, default=None, help="window length (default 1/lambda)")
    p.add_argument("--horizon", type=float, default=1e4)
    p.add_argument("--burn-in", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=("compiled", "reference"), default="compiled")
    p.add_argument("--output", type=Path, default=None, help="also write the summary as JSON")

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--config", type=Path, default=None, help="key = value settings file")
    p.add_argument("--n", type=_int_list, default=None)
    p.add_argument("--ratios", type=_float_list, default=None, help="lambda_e / lambda values")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--policies", type=_policy_list, default=None)
    p.add_argument("--delta", type=_delta, default=argparse.SUPPRESS)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--burn-in", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", type=Path, default=None, help="CSV path (default results/sweep.csv)")
    p.add_argument("--plot-dir", type=Path, default=None, help="also write per-ratio plot series here")

    p = sub.add_parser("theory", help="print closed-form predictions")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda-e", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--B", dest="capacity", type=float, default=None)
    p.add_argument("--delta", type=_delta, default=None)

    p = sub.add_parser("queue-check", help="compare a simulated M/D/inf queue with its Poisson law")
    p.add_argument("--rho", type=_float_list, default=(1.0,), help="load(s), comma-separated")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=1e5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=0.01, help="maximum total-variation distance")

    p = sub.add_parser("reproduce-fig3", help="run the desk-scale three-ratio comparison grid")
    p.add_argument("--output-dir", type=Path, default=Path("results/fig3"))
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    return parser


def _cmd_simulate(args) -> int:
    delta = args.delta
    if args.policy is PolicyKind.FULLY_DISTRIBUTED and delta is None:
        delta = analytics.optimal_delta(args.lam) if args.lam > 0 else None
    cfg = validate_config(
        SimConfig(
            n=args.n,
            lambda_e=args.lambda_e,
            lam=args.lam,
            policy=args.policy,
            horizon=args.horizon,
            capacity_b=args.capacity,
            delta=delta,
            burn_in=args.burn_in,
            seed=args.seed,
        )
    )
    result = run(cfg, backend=args.backend)
    summary = result.summary()
    theory = analytics.predict(cfg.policy, cfg.n, cfg.lambda_e, cfg.lam, cfg.capacity_b, cfg.delta)
    summary["theory_finite_n"] = theory.mean_age
    summary["theory_asymptote"] = theory.asymptote
    for key in ("policy", "n", "lambda_e", "lambda", "B", "delta", "horizon", "seed"):
        print(f"{key:>16}: {summary[key]}")
    print(f"{'mean_age':>16}: {summary['mean_age']:.6f}")
    print(f"{'min_age':>16}: {summary['min_age']:.6f}")
    print(f"{'mean_gossipers':>16}: {summary['mean_gossipers']:.6f}")
    print(f"{'theory_finite_n':>16}: {theory.mean_age:.6f}")
    print(f"{'theory_asymptote':>16}: {theory.asymptote:.6f}")
    for key, count in summary["event_counts"].items():
        key = key.replace("gossip_", "").replace("source_", "")
        print(f"{key:>16}: {count}")
    if args.output is not None:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        args.output.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return 0


def _print_points(result) -> None:
    print(f"{'policy':<8} {'n':>5} {'ratio':>6} {'mean_age':>10} {'stderr':>9} {'theory':>9} {'asymptote':>9}")
    for p in result.points:
        print(
            f"{p.policy.value:<8} {p.n:>5} {p.ratio:>6g} {p.mean_age:>10.4f} {p.stderr:>9.4f} "
            f"{p.theory_finite_n:>9.4f} {p.theory_asymptote:>9.4f}"
        )


def _cmd_sweep(args) -> int:
    settings = parse_config_file(args.config) if args.config else {}
    flags = {
        "n": args.n,
        "ratios": args.ratios,
        "lambda": args.lam,
        "policies": args.policies,
        "trials": args.trials,
        "horizon": args.horizon,
        "burn_in": args.burn_in,
        "seed": args.seed,
        "workers": args.workers,
        "output": args.output,
    }
    settings.update({k: v for k, v in flags.items() if v is not None})
    if hasattr(args, "delta"):
        settings["delta"] = args.delta
    spec = spec_from_settings(settings)
    output = spec.output or Path("results/sweep.csv")
    result = run_sweep(spec)
    emit_csv(result, output)
    if args.plot_dir is not None:
        emit_plot_data(result, args.plot_dir)
    _print_points(result)
    print(f"wrote {output}")
    return 0


def _cmd_theory(args) -> int:
    n, le, lam = args.n, args.lambda_e, args.lam
    capacity = args.capacity if args.capacity is not None else n * lam
    delta = args.delta if args.delta is not None else analytics.optimal_delta(lam)
    print(f"n={n} lambda_e={le:g} lambda={lam:g} B={capacity:g} delta={delta:g}")
    print(f"{'policy':<8} {'mean_age':>10} {'asymptote':>10}")
    for kind in (PolicyKind.SEMI_DISTRIBUTED, PolicyKind.ASUMAN, PolicyKind.FULLY_DISTRIBUTED, PolicyKind.UNIFORM):
        t = analytics.predict(kind, n, le, lam, capacity, delta)
        print(f"{kind.value:<8} {t.mean_age:>10.4f} {t.asymptote:>10.4f}")
    print(f"{'bound':<8} {analytics.lower_bound(n, le, lam, capacity):>10.4f}")
    print(f"effective gossip rate: {analytics.effective_gossip_rate(lam, delta, capacity):.4f}")
    return 0


def _cmd_queue_check(args) -> int:
    ok = True
    for rho in args.rho:
        check = queue_check(rho, lam=args.lam, horizon=args.horizon, seed=args.seed, tv_tolerance=args.tolerance)
        status = "PASS" if check.passed else "FAIL"
        print(
            f"{status} rho={rho:g} tv={check.tv_distance:.5f} (< {args.tolerance:g}) "
            f"p1={check.p1:.5f} expected={check.p1_expected:.5f} mean={check.mean_occupancy:.4f}"
        )
        ok &= check.passed
    return 0 if ok else 1


def _cmd_reproduce_fig3(args) -> int:
    overrides = {k: v for k, v in vars(args).items() if k in ("trials", "horizon", "seed", "workers") and v is not None}
    spec = fig3_spec(**overrides)
    result = run_sweep(spec)
    emit_csv(result, args.output_dir / "sweep.csv")
    files = emit_plot_data(result, args.output_dir)
    _print_points(result)
    for f in [args.output_dir / "sweep.csv", *files]:
        print(f"wrote {f}")
    return 0


COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "theory": _cmd_theory,
    "queue-check": _cmd_queue_check,
    "reproduce-fig3": _cmd_reproduce_fig3,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return 2
    except GossipError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[IOError]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
