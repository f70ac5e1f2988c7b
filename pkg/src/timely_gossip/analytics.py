"""Closed-form mean-age predictions for the gossip schemes."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import GossipError, PolicyKind


class DivisionDomain(GossipError, ValueError):
    pass


class NegativeRho(GossipError, ValueError):
    pass


def _check_rates(**rates):
    for name, value in rates.items():
        if not value > 0:
            raise DivisionDomain(f"{name} must be positive, got {value!r}")


def _age_with_gossip_rate(n, lambda_e, lam, gossip_rate):
    # n = 1 has no neighbours: the gossip term vanishes
    per_link = 0.0 if n == 1 else gossip_rate / (n - 1)
    return (lambda_e + per_link * lambda_e / lam) / (lam / n + per_link)


def semi_distributed_mean_age(n: int, lambda_e: float, lam: float, capacity: float) -> float:
    """Mean version age of a node when only the freshest node gossips at ``capacity``."""
    if n < 1:
        raise DivisionDomain(f"n must be >= 1, got {n}")
    _check_rates(lambda_e=lambda_e, lam=lam)
    if capacity < 0:
        raise DivisionDomain(f"capacity must be non-negative, got {capacity!r}")
    return _age_with_gossip_rate(n, lambda_e, lam, capacity)


def semi_distributed_asymptote(lambda_e: float, lam: float) -> float:
    _check_rates(lambda_e=lambda_e, lam=lam)
    return 2 * lambda_e / lam


def lower_bound(n: int, lambda_e: float, lam: float, capacity: float) -> float:
    """Smallest mean age any symmetric policy with aggregate rate <= capacity can reach."""
    return semi_distributed_mean_age(n, lambda_e, lam, capacity)


def mg_infty_stationary(rho: float, k: int) -> float:
    """P(k busy servers) in a stationary M/G/inf queue with load ``rho``."""
    if rho < 0:
        raise NegativeRho(f"rho must be >= 0, got {rho!r}")
    if k < 0:
        return 0.0
    if rho == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(rho) - rho - math.lgamma(k + 1))


def effective_gossip_rate(lam: float, delta: float, capacity: float) -> float:
    """Capacity times the stationary probability that exactly one window is open."""
    rho = lam * delta
    return rho * math.exp(-rho) * capacity


def fully_distributed_mean_age(n: int, lambda_e: float, lam: float, capacity: float, delta: float) -> float:
    if n < 2:
        raise DivisionDomain("fully-distributed prediction needs n >= 2")
    _check_rates(lambda_e=lambda_e, lam=lam, delta=delta)
    return _age_with_gossip_rate(n, lambda_e, lam, effective_gossip_rate(lam, delta, capacity))


def fully_distributed_asymptote(lambda_e: float, lam: float, delta: float) -> float:
    _check_rates(lambda_e=lambda_e, lam=lam, delta=delta)
    rho = lam * delta
    return lambda_e / lam * (1 + 1 / (rho * math.exp(-rho)))


def optimal_delta(lam: float) -> float:
    """Window length maximising the effective gossip rate."""
    _check_rates(lam=lam)
    return 1 / lam


def asuman_mean_age(n: int, lambda_e: float, lam: float) -> float:
    """Finite-n ASUMAN expression (with B = n * lam)."""
    if n < 2:
        raise DivisionDomain("ASUMAN prediction needs n >= 2")
    _check_rates(lambda_e=lambda_e, lam=lam)
    r = n / (n - 1)
    return lambda_e / lam * (1 + r * (1 + lam / lambda_e)) / (1 / n + r)


def asuman_asymptote(lambda_e: float, lam: float) -> float:
    _check_rates(lambda_e=lambda_e, lam=lam)
    return 2 * lambda_e / lam + 1


def uniform_mean_age(n: int, lambda_e: float, lam: float, capacity: float) -> float:
    """Mean age when each node gossips at ``capacity / n`` to uniform neighbours.

    Solves the set-age recursion for a fully connected symmetric network:
    with ``v_j`` the mean age of the freshest node in a j-subset,
    ``v_j = (lambda_e + r_j v_{j+1}) / (j lam / n + r_j)`` where
    ``r_j = j (n - j) (capacity / n) / (n - 1)`` and ``v_n = lambda_e / lam``.
    Returns ``v_1``.
    """
    if n < 1:
        raise DivisionDomain(f"n must be >= 1, got {n}")
    _check_rates(lambda_e=lambda_e, lam=lam)
    v = lambda_e / lam
    for j in range(n - 1, 0, -1):
        r = j * (n - j) * (capacity / n) / (n - 1)
        v = (lambda_e + r * v) / (j * lam / n + r)
    return v


@dataclass(frozen=True)
class TheoryPrediction:
    policy: PolicyKind
    mean_age: float
    asymptote: float
    n: int
    lambda_e: float
    lam: float
    capacity: float
    delta: float | None = None


def predict(
    policy: PolicyKind,
    n: int,
    lambda_e: float,
    lam: float,
    capacity: float | None = None,
    delta: float | None = None,
) -> TheoryPrediction:
    """Finite-n value and n -> inf limit for ``policy``.

    Asymptotes assume the capacity scales as ``n * lam``.  The ASUMAN
    expression is only defined for that capacity and ignores ``capacity``.
    The uniform scheme grows like log n, so its asymptote is ``inf``.
    """
    if capacity is None:
        capacity = n * lam
    match policy:
        case PolicyKind.SEMI_DISTRIBUTED:
            value = semi_distributed_mean_age(n, lambda_e, lam, capacity)
            limit = semi_distributed_asymptote(lambda_e, lam)
        case PolicyKind.FULLY_DISTRIBUTED:
            if delta is None:
                delta = optimal_delta(lam)
            value = fully_distributed_mean_age(n, lambda_e, lam, capacity, delta) if n >= 2 else n * lambda_e / lam
            limit = fully_distributed_asymptote(lambda_e, lam, delta)
        case PolicyKind.ASUMAN:
            value = asuman_mean_age(n, lambda_e, lam) if n >= 2 else n * lambda_e / lam
            limit = asuman_asymptote(lambda_e, lam)
        case PolicyKind.UNIFORM:
            value = uniform_mean_age(n, lambda_e, lam, capacity)
            limit = math.inf
        case _:
            raise ValueError(f"unhandled policy {policy!r}")
    return TheoryPrediction(policy, value, limit, n, lambda_e, lam, capacity, delta)
