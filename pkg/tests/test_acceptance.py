"""Acceptance suite: one check per primary criterion.

Each test prints a single PASS/FAIL line (run with ``-s`` to see them inline);
the lines are repeated in an "acceptance criteria" section at the end of the run.
"""

import math
from dataclasses import replace

import numba
import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, mean_se
from test_engine import InvariantChecker

from timely_gossip import analytics
from timely_gossip.core import PolicyKind, SimConfig, derive_seed, make_rng, validate_config
from timely_gossip.engine import run, run_reference
from timely_gossip.harness import fig3_spec, run_sweep
from timely_gossip.policies import policy_for
from timely_gossip.queue import queue_check

pytestmark = pytest.mark.slow

SEMI, FULLY, ASUMAN, UNIFORM = (
    PolicyKind.SEMI_DISTRIBUTED,
    PolicyKind.FULLY_DISTRIBUTED,
    PolicyKind.ASUMAN,
    PolicyKind.UNIFORM,
)


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] C{number:<2} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def trial_means(policy, n, trials, horizon, root, lambda_e=1.0, lam=1.0, **kw):
    cfg = dict(n=n, lambda_e=lambda_e, lam=lam, policy=policy, horizon=horizon, **kw)
    return [run(SimConfig(seed=derive_seed(root, k), **cfg)) for k in range(trials)]


def rel_err(value, target):
    return abs(value - target) / target


@pytest.fixture(scope="module")
def fig3():
    return run_sweep(fig3_spec(workers=1))


def test_c01_semi_finite_n():
    target = analytics.semi_distributed_mean_age(100, 1.0, 1.0, 100.0)
    m, se = mean_se([r.mean_age for r in trial_means(SEMI, 100, 20, 2e5, root=101)])
    err = rel_err(m, target)
    ok = report(1, "semi n=100 vs closed form", err < 0.02, f"sim {m:.4f}±{se:.4f} theory {target:.4f} err {err:.2%} (<2%)")
    assert ok


def test_c02_semi_asymptote():
    m, se = mean_se([r.mean_age for r in trial_means(SEMI, 256, 10, 2e4, root=102)])
    err = rel_err(m, 2.0)
    ok = report(2, "semi n=256 vs asymptote 2", err < 0.03, f"sim {m:.4f}±{se:.4f} err {err:.2%} (<3%)")
    assert ok


def test_c03_fully_at_optimal_window():
    target = analytics.fully_distributed_mean_age(256, 1.0, 1.0, 256.0, 1.0)
    asym = analytics.fully_distributed_asymptote(1.0, 1.0, 1.0)
    m, se = mean_se([r.mean_age for r in trial_means(FULLY, 256, 10, 2e4, root=103, delta=1.0)])
    err = rel_err(m, target)
    ok = report(
        3,
        "fully n=256 delta=1 vs finite-n expression",
        err < 0.03,
        f"sim {m:.4f}±{se:.4f} theory {target:.4f} err {err:.2%} (<3%); asymptote {asym:.3f} gap {rel_err(m, asym):.2%}",
    )
    assert ok


def test_c04_window_sensitivity():
    stats = {d: mean_se([r.mean_age for r in trial_means(FULLY, 128, 10, 1e4, root=104, delta=d)]) for d in (0.25, 1.0, 4.0)}
    best, best_se = stats[1.0]
    margins = {d: (m - best) / math.hypot(se, best_se) for d, (m, se) in stats.items() if d != 1.0}
    ok = all(z > 3 for z in margins.values())
    detail = ", ".join(f"delta={d:g}: {m:.4f}±{se:.4f}" for d, (m, se) in stats.items())
    detail += "; separation " + ", ".join(f"{z:.1f} sigma" for z in margins.values())
    report(4, "fully minimised at delta=1/lambda", ok, detail)
    assert ok


def test_c05_asuman_asymptote():
    m, se = mean_se([r.mean_age for r in trial_means(ASUMAN, 256, 10, 2e4, root=105)])
    err = rel_err(m, 3.0)
    ok = report(5, "asuman n=256 vs asymptote 3", err < 0.03, f"sim {m:.4f}±{se:.4f} err {err:.2%} (<3%)")
    assert ok


def test_c06_semi_lowest_everywhere(fig3):
    worst = -math.inf
    checked = 0
    for semi in (p for p in fig3.points if p.policy is SEMI):
        for kind in (FULLY, ASUMAN, UNIFORM):
            other = fig3.point(kind, semi.n, semi.ratio)
            z = (semi.mean_age - other.mean_age) / math.hypot(semi.stderr, other.stderr)
            worst = max(worst, z)
            checked += 1
    ok = worst <= 3
    report(6, "semi lowest at every grid point", ok, f"{checked} comparisons, largest (semi - other)/sigma = {worst:.1f} (<=3)")
    assert ok


def test_c07_crossover(fig3):
    """Asymptotic ordering, read at the largest grid size."""
    n = max(fig3.spec.n_values)
    parts, ok = [], True
    for ratio, asuman_worse in ((0.4, True), (1.0, False), (2.0, False)):
        a, f = fig3.point(ASUMAN, n, ratio), fig3.point(FULLY, n, ratio)
        z = (a.mean_age - f.mean_age) / math.hypot(a.stderr, f.stderr)
        ok &= z > 3 if asuman_worse else z < -3
        parts.append(f"ratio {ratio:g}: asuman {a.mean_age:.3f} fully {f.mean_age:.3f} ({z:+.1f} sigma)")
    # full picture, informational
    holds = []
    for n_i in fig3.spec.n_values:
        a, f = fig3.point(ASUMAN, n_i, 0.4), fig3.point(FULLY, n_i, 0.4)
        holds.append(f"{n_i}:{(a.mean_age - f.mean_age) / math.hypot(a.stderr, f.stderr):+.1f}")
    parts.append("ratio 0.4 sigma by n " + " ".join(holds))
    report(7, f"asuman/fully crossover at n={n}", ok, "; ".join(parts))
    assert ok


def test_c08_min_age_law():
    m, se = mean_se([r.min_age for r in trial_means(SEMI, 128, 10, 2e4, root=108)])
    err = rel_err(m, 1.0)
    ok = report(8, "semi min-age average vs lambda_e/lambda", err < 0.03, f"sim {m:.4f}±{se:.4f} err {err:.2%} (<3%)")
    assert ok


def test_c09_queue_law():
    checks = [queue_check(rho, horizon=1e5, seed=109) for rho in (0.5, 1.0, 2.0)]
    unit = checks[1]
    p1_err = rel_err(unit.p1, math.exp(-1))
    ok = all(c.tv_distance < 0.01 for c in checks) and p1_err < 0.01
    detail = ", ".join(f"rho={c.rho:g} tv {c.tv_distance:.4f}" for c in checks)
    report(9, "M/D/inf occupancy law", ok, f"{detail} (<0.01); p1 {unit.p1:.5f} vs {math.exp(-1):.5f} err {p1_err:.2%} (<1%)")
    assert ok


def test_c10_uniform_grows_semi_flat():
    sizes = (32, 128, 512)
    uni = [mean_se([r.mean_age for r in trial_means(UNIFORM, n, 10, 1e4, root=110)]) for n in sizes]
    semi = [mean_se([r.mean_age for r in trial_means(SEMI, n, 10, 2e4, root=111)]) for n in sizes]
    steps = [(b[0] - a[0]) / math.hypot(a[1], b[1]) for a, b in zip(uni, uni[1:])]
    spread = max(m for m, _ in semi) / min(m for m, _ in semi) - 1
    ok = all(z > 3 for z in steps) and spread < 0.05
    detail = "uniform " + " < ".join(f"{m:.3f}" for m, _ in uni) + " (" + ", ".join(f"{z:.0f} sigma" for z in steps) + ")"
    detail += "; semi " + ", ".join(f"{m:.3f}" for m, _ in semi) + f" spread {spread:.2%} (<5%)"
    report(10, "uniform grows, semi flat", ok, detail)
    assert ok


# -- C11: invariants and an independent two-node oracle --------------------


@numba.njit(cache=True)
def _two_node_steps(u, state, lam_e, lam, capacity, dt):
    """Time-stepped two-node chain; returns the summed mean node age per step."""
    d0, d1, last = state[0], state[1], state[2]
    p_self = lam_e * dt
    p_node = 0.5 * lam * dt
    p_gossip = capacity * dt
    total = 0.0
    for x in u:
        if x < p_self:
            d0 += 1
            d1 += 1
        elif x < p_self + p_node:
            d0 = 0
            last = 0
        elif x < p_self + 2 * p_node:
            d1 = 0
            last = 1
        elif last >= 0 and x < p_self + 2 * p_node + p_gossip:
            if last == 0:
                d1 = min(d0, d1)
            else:
                d0 = min(d0, d1)
        total += 0.5 * (d0 + d1)
    state[0], state[1], state[2] = d0, d1, last
    return total


def two_node_oracle(lam_e, lam, capacity, horizon, dt, seed, chunk=1_000_000):
    rng = np.random.default_rng(seed)
    state = np.array([0, 0, -1], dtype=np.int64)

    def advance(steps):
        acc, done = 0.0, 0
        while done < steps:
            u = rng.random(min(chunk, steps - done))
            acc += _two_node_steps(u, state, lam_e, lam, capacity, dt)
            done += len(u)
        return acc / steps

    steps = int(horizon / dt)
    advance(steps // 10)
    return advance(steps - steps // 10)


def test_c11_two_node_oracle_and_invariants():
    oracle = two_node_oracle(1.0, 1.0, 2.0, horizon=2e5, dt=1e-3, seed=111, chunk=100_000)
    engine_mean, engine_se = mean_se([r.mean_age for r in trial_means(SEMI, 2, 20, 1e4, root=112)])
    err = rel_err(engine_mean, oracle)

    trajectories = 0
    rng = make_rng(113)
    for kind in PolicyKind:
        for n in (1, 2, 5):
            cfg = validate_config(
                SimConfig(n=n, lambda_e=float(rng.uniform(0.3, 2)), lam=float(rng.uniform(0.3, 2)), policy=kind,
                          horizon=60.0, delta=float(rng.uniform(0.2, 2)), seed=int(rng.integers(2**32)))
            )
            checker = InvariantChecker(cfg)
            ref = run_reference(cfg, policy_for(cfg), observer=checker)
            assert checker.events > 0
            assert math.isclose(float(np.sum(ref.occupancy)), 1.0, abs_tol=1e-9)
            assert run(cfg) == run(replace(cfg))
            trajectories += 1

    ok = err < 0.02
    report(
        11,
        "two-node oracle and invariants",
        ok,
        f"engine {engine_mean:.4f}±{engine_se:.4f} oracle {oracle:.4f} err {err:.2%} (<2%); "
        f"closed form 1.2; {trajectories} invariant-checked trajectories",
    )
    assert ok


def test_burn_in_doubling_is_immaterial(fig3):
    """Supplementary: the default burn-in is long enough on the comparison grid."""
    spec = fig3.spec
    doubled = run_sweep(replace(spec, burn_in=0.2 * spec.horizon))
    worst = max(rel_err(b.mean_age, a.mean_age) for a, b in zip(fig3.points, doubled.points))
    line = f"[{'PASS' if worst < 0.005 else 'FAIL'}] --  burn-in doubling on the comparison grid: max shift {worst:.3%} (<0.5%)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert worst < 0.005
