"""Continuous-time event-driven simulation of version age under gossip.

Two backends share one contract:

* ``run_reference`` walks the policy callbacks in pure Python.  It is O(n)
  per event and meant for small networks and for cross-checking.
* the compiled backend (``_kernel.simulate``) implements the same dynamics
  for the four stock policies with O(1) work per event.

All stochastic events come from one superposed exponential clock whose rate
is rebuilt after every event; window expiries are deterministic and merged
in from a sorted pending list.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernel
from .core import (
    AgeAccumulator,
    GossipError,
    NetworkState,
    PolicyKind,
    SimConfig,
    make_rng,
    validate_config,
)
from .policies import (
    AsumanPolicy,
    FullyDistributedPolicy,
    Policy,
    SemiDistributedPolicy,
    UniformPolicy,
    policy_for,
)


class SenderNotActive(GossipError):
    pass


class RateCapExceeded(GossipError):
    pass


class EventType(enum.Enum):
    SOURCE_SELF_UPDATE = "source_self_update"
    SOURCE_TO_NODE = "source_to_node"
    GOSSIP_TRANSMISSION = "gossip_transmission"
    WINDOW_EXPIRY = "window_expiry"
    FRAME_BOUNDARY = "frame_boundary"


class Event(NamedTuple):
    kind: EventType
    node: int = -1  # target of a source update, sender of a gossip, owner of a window
    target: int = -1  # gossip receiver


COUNT_KEYS = (
    "source_self_update",
    "source_to_node",
    "gossip_transmission",
    "gossip_effective",
    "window_expiry",
    "frame_boundary",
)


@dataclass(frozen=True)
class RateTable:
    source_self_rate: float
    source_to_node_rate_total: float
    gossip_rates: np.ndarray  # per sender

    @property
    def n(self) -> int:
        return len(self.gossip_rates)

    @property
    def gossip_rate_total(self) -> float:
        return float(self.gossip_rates.sum())

    @property
    def total(self) -> float:
        return self.source_self_rate + self.source_to_node_rate_total + self.gossip_rate_total


def next_event(
    rates: RateTable,
    pending: list[tuple[float, Event]],
    rng: np.random.Generator,
    now: float = 0.0,
) -> tuple[float, Event | None]:
    """Time until the next event and the event itself.

    ``pending`` holds deterministic events as ``(absolute_time, event)``
    sorted by time.  Returns ``(inf, None)`` when nothing can ever happen.
    """
    if min(rates.source_self_rate, rates.source_to_node_rate_total) < 0 or np.any(rates.gossip_rates < 0):
        raise GossipError("negative rate in rate table")
    total = rates.total
    wait = rng.exponential(1.0 / total) if total > 0 else math.inf
    if pending and pending[0][0] - now <= wait:
        when, event = pending[0]
        return max(when - now, 0.0), event
    if math.isinf(wait):
        return math.inf, None

    u = rng.random() * total
    if u < rates.source_self_rate:
        return wait, Event(EventType.SOURCE_SELF_UPDATE)
    if u < rates.source_self_rate + rates.source_to_node_rate_total:
        return wait, Event(EventType.SOURCE_TO_NODE, int(rng.integers(rates.n)))
    cumulative = np.cumsum(rates.gossip_rates)
    x = rng.random() * cumulative[-1]
    sender = min(int(np.searchsorted(cumulative, x, side="right")), rates.n - 1)
    target = int(rng.integers(rates.n - 1))
    if target >= sender:
        target += 1
    return wait, Event(EventType.GOSSIP_TRANSMISSION, sender, target)


def integrate_age(acc: AgeAccumulator, state: NetworkState, dt: float, burn_in: float = 0.0) -> AgeAccumulator:
    """Add the interval ``[clock, clock + dt]`` (clipped at ``burn_in``) to ``acc``."""
    start = max(state.clock, burn_in)
    span = state.clock + dt - start
    if span <= 0:
        return acc
    ages = state.ages()
    acc.per_node_age_integral += ages * span
    acc.min_age_integral += int(ages.min()) * span
    k = len(state.gossipers)
    acc.occupancy_integral[k] = acc.occupancy_integral.get(k, 0.0) + span
    acc.accumulated_time += span
    return acc


def deliver_gossip(state: NetworkState, sender: int, target: int, effective: bool) -> NetworkState:
    if sender == target:
        raise GossipError(f"node {sender} cannot gossip to itself")
    if sender not in state.gossipers:
        raise SenderNotActive(f"node {sender} is not gossiping")
    if effective and state.node_versions[sender] > state.node_versions[target]:
        state.node_versions[target] = state.node_versions[sender]
    return state


@dataclass(frozen=True)
class TrialResult:
    config: SimConfig
    node_mean_age: np.ndarray
    min_age: float
    occupancy: np.ndarray  # occupancy[k] = fraction of time with k gossipers
    event_counts: dict[str, int] = field(default_factory=dict)
    span: float = 0.0

    @property
    def mean_age(self) -> float:
        return float(self.node_mean_age.mean())

    @property
    def mean_gossipers(self) -> float:
        return float(np.dot(np.arange(len(self.occupancy)), self.occupancy))

    def __eq__(self, other):
        if not isinstance(other, TrialResult):
            return NotImplemented
        return (
            self.config == other.config
            and np.array_equal(self.node_mean_age, other.node_mean_age)
            and self.min_age == other.min_age
            and np.array_equal(self.occupancy, other.occupancy)
            and self.event_counts == other.event_counts
            and self.span == other.span
        )

    def summary(self) -> dict:
        cfg = self.config
        return {
            "policy": cfg.policy.value,
            "n": cfg.n,
            "lambda_e": cfg.lambda_e,
            "lambda": cfg.lam,
            "B": cfg.capacity_b,
            "delta": cfg.delta,
            "horizon": cfg.horizon,
            "burn_in": cfg.burn_in,
            "seed": cfg.seed,
            "mean_age": self.mean_age,
            "min_age": self.min_age,
            "mean_gossipers": self.mean_gossipers,
            "occupancy": {k: float(p) for k, p in enumerate(self.occupancy) if p > 0},
            "event_counts": dict(self.event_counts),
        }


_STOCK = {
    UniformPolicy: _kernel.UNIFORM,
    SemiDistributedPolicy: _kernel.SEMI,
    FullyDistributedPolicy: _kernel.FULLY,
    AsumanPolicy: _kernel.ASUMAN,
}


def run(cfg: SimConfig, policy: Policy | None = None, *, backend: str = "compiled") -> TrialResult:
    """Simulate ``[0, horizon]`` and time-average ages over ``[burn_in, horizon]``."""
    cfg = validate_config(cfg)
    if policy is None:
        policy = policy_for(cfg)
    elif policy.kind is not cfg.policy:
        raise GossipError(f"policy {policy!r} does not match config policy {cfg.policy.value}")
    if backend == "reference":
        return run_reference(cfg, policy)
    if backend != "compiled":
        raise ValueError(f"unknown backend {backend!r}")
    if type(policy) not in _STOCK:
        raise GossipError(f"{type(policy).__name__} is not supported by the compiled backend")

    delta = policy.delta if isinstance(policy, FullyDistributedPolicy) else 1.0
    node_int, min_int, occ, counts, span = _kernel.simulate(
        _STOCK[type(policy)],
        cfg.n,
        float(cfg.lambda_e),
        float(cfg.lam),
        float(cfg.capacity_b),
        float(delta),
        float(cfg.horizon),
        float(cfg.burn_in),
        make_rng(cfg.seed),
    )
    return TrialResult(
        config=cfg,
        node_mean_age=node_int / span,
        min_age=min_int / span,
        occupancy=occ / span,
        event_counts=dict(zip(COUNT_KEYS, (int(c) for c in counts))),
        span=span,
    )


def run_reference(cfg: SimConfig, policy: Policy, observer=None) -> TrialResult:
    """Pure-Python event loop driven by the policy callbacks.

    ``observer(state, event, rates, effective)`` is called after every
    processed event; ``effective`` is None except for gossip transmissions.
    """
    cfg = validate_config(cfg)
    rng = make_rng(cfg.seed)
    n, capacity = cfg.n, cfg.capacity_b
    state = NetworkState.fresh(n)
    state.gossipers = policy.initial_gossipers(n)
    acc = AgeAccumulator.zeros(n)
    counts = dict.fromkeys(COUNT_KEYS, 0)
    capped = policy.kind is not PolicyKind.FULLY_DISTRIBUTED

    while state.clock < cfg.horizon:
        gossip = policy.current_gossip_rates(state, capacity)
        if capped and gossip.sum() > capacity * (1 + 1e-12):
            raise RateCapExceeded(f"aggregate gossip rate {gossip.sum()} exceeds B={capacity}")
        rates = RateTable(cfg.lambda_e, cfg.lam, gossip)
        pending = [(end, Event(EventType.WINDOW_EXPIRY, i)) for end, i in policy.pending_expiries(state)]
        dt, event = next_event(rates, pending, rng, now=state.clock)
        dt = min(dt, cfg.horizon - state.clock)
        integrate_age(acc, state, dt, cfg.burn_in)
        state.clock += dt
        if state.clock >= cfg.horizon or event is None:
            break

        effective = None
        match event.kind:
            case EventType.SOURCE_SELF_UPDATE:
                state.source_version += 1
                counts["source_self_update"] += 1
                if policy.kind is PolicyKind.ASUMAN:
                    counts["frame_boundary"] += 1
                policy.on_source_self_update(state)
            case EventType.SOURCE_TO_NODE:
                state.node_versions[event.node] = state.source_version
                counts["source_to_node"] += 1
                policy.on_source_to_node(state, event.node)
            case EventType.GOSSIP_TRANSMISSION:
                effective = policy.is_effective(state, event.node)
                deliver_gossip(state, event.node, event.target, effective)
                counts["gossip_transmission"] += 1
                counts["gossip_effective"] += int(effective)
            case EventType.WINDOW_EXPIRY:
                policy.on_window_expiry(state, event.node)
                counts["window_expiry"] += 1
        if observer is not None:
            observer(state, event, rates, effective)

    span = acc.accumulated_time
    occupancy = np.zeros(n + 1)
    for k, t in acc.occupancy_integral.items():
        occupancy[k] = t / span
    return TrialResult(
        config=cfg,
        node_mean_age=acc.per_node_age_integral / span,
        min_age=acc.min_age_integral / span,
        occupancy=occupancy,
        event_counts=counts,
        span=span,
    )
