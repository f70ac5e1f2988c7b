"""Gossip-rate allocation schemes.

A policy reacts to source events by editing ``state.gossipers`` (and, for
the fully-distributed scheme, ``state.window_end``) and reports the per-node
gossip rates implied by that set.  Policies never look at node indices
except through the state, so every scheme here is symmetric.
"""

from __future__ import annotations

import numpy as np

from .core import ConfigError, NetworkState, NonPositiveRate, PolicyKind, SimConfig


class Policy:
    kind: PolicyKind

    def initial_gossipers(self, n: int) -> set[int]:
        return set()

    def on_source_self_update(self, state: NetworkState) -> None:
        pass

    def on_source_to_node(self, state: NetworkState, i: int) -> None:
        pass

    def on_window_expiry(self, state: NetworkState, i: int) -> None:
        raise ConfigError(f"{type(self).__name__} has no gossip windows")

    def pending_expiries(self, state: NetworkState) -> list[tuple[float, int]]:
        return []

    def sender_rate(self, state: NetworkState, capacity: float) -> float:
        """Rate at which each current gossiper transmits."""
        raise NotImplementedError

    def current_gossip_rates(self, state: NetworkState, capacity: float) -> np.ndarray:
        rates = np.zeros(state.n)
        if state.n > 1 and state.gossipers:
            rates[sorted(state.gossipers)] = self.sender_rate(state, capacity)
        return rates

    def is_effective(self, state: NetworkState, sender: int) -> bool:
        return True

    def __repr__(self):
        return f"{type(self).__name__}()"


class UniformPolicy(Policy):
    """Every node gossips at ``capacity / n`` forever (``lambda`` when B = n*lambda)."""

    kind = PolicyKind.UNIFORM

    def initial_gossipers(self, n):
        return set(range(n))

    def sender_rate(self, state, capacity):
        return capacity / state.n


class SemiDistributedPolicy(Policy):
    """The node most recently updated by the source gossips at the full rate.

    Its pilot signal silences the previous gossiper, so at most one node is
    ever active.  Nobody gossips until the first source-to-node update.
    """

    kind = PolicyKind.SEMI_DISTRIBUTED

    def on_source_to_node(self, state, i):
        state.gossipers.clear()
        state.gossipers.add(i)

    def sender_rate(self, state, capacity):
        return capacity


class FullyDistributedPolicy(Policy):
    """A source-updated node gossips at the full rate for ``delta`` time units.

    A second update inside an open window restarts it.  Transmissions only
    get through while a single window is open; overlapping windows collide.
    """

    kind = PolicyKind.FULLY_DISTRIBUTED

    def __init__(self, delta: float):
        if not delta > 0:
            raise NonPositiveRate(f"delta must be positive, got {delta!r}")
        self.delta = float(delta)

    def on_source_to_node(self, state, i):
        state.window_end[i] = state.clock + self.delta
        state.gossipers.add(i)

    def on_window_expiry(self, state, i):
        del state.window_end[i]
        state.gossipers.discard(i)

    def pending_expiries(self, state):
        return sorted((end, i) for i, end in state.window_end.items())

    def sender_rate(self, state, capacity):
        return capacity

    def is_effective(self, state, sender):
        return len(state.gossipers) == 1

    def __repr__(self):
        return f"FullyDistributedPolicy(delta={self.delta!r})"


class AsumanPolicy(Policy):
    """Frame-synchronised age-aware baseline.

    Each source self-update opens a frame; the nodes holding the freshest
    version at that instant split the capacity equally until the next frame.
    Nodes that become fresher mid-frame wait for the next one.
    """

    kind = PolicyKind.ASUMAN

    def initial_gossipers(self, n):
        # all nodes start tied at age 0
        return set(range(n))

    def on_source_self_update(self, state):
        freshest = state.node_versions.max()
        state.gossipers = set(np.flatnonzero(state.node_versions == freshest).tolist())

    def sender_rate(self, state, capacity):
        return capacity / len(state.gossipers)


def uniform_policy() -> Policy:
    return UniformPolicy()


def semi_distributed_policy() -> Policy:
    return SemiDistributedPolicy()


def fully_distributed_policy(delta: float) -> Policy:
    return FullyDistributedPolicy(delta)


def asuman_policy() -> Policy:
    return AsumanPolicy()


def policy_for(cfg: SimConfig) -> Policy:
    match cfg.policy:
        case PolicyKind.UNIFORM:
            return UniformPolicy()
        case PolicyKind.SEMI_DISTRIBUTED:
            return SemiDistributedPolicy()
        case PolicyKind.FULLY_DISTRIBUTED:
            return FullyDistributedPolicy(cfg.delta)
        case PolicyKind.ASUMAN:
            return AsumanPolicy()
    raise ConfigError(f"unhandled policy {cfg.policy!r}")
