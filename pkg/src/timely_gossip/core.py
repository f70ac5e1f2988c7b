"""Domain types, parameter validation and the seeding rule."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np

MASK64 = (1 << 64) - 1


class GossipError(Exception):
    """Base class for every error raised by this package."""

    @property
    def category(self) -> str:
        return type(self).__name__


class ConfigError(GossipError, ValueError):
    pass


class NonPositiveRate(ConfigError):
    pass


class BurnInExceedsHorizon(ConfigError):
    pass


class MissingDelta(ConfigError):
    pass


class IndexOutOfRange(GossipError, IndexError):
    pass


class PolicyKind(enum.Enum):
    UNIFORM = "uniform"
    SEMI_DISTRIBUTED = "semi"
    FULLY_DISTRIBUTED = "fully"
    ASUMAN = "asuman"

    @classmethod
    def parse(cls, text: str) -> PolicyKind:
        key = text.strip().lower().replace("_", "-")
        aliases = {
            "uniform": cls.UNIFORM,
            "semi": cls.SEMI_DISTRIBUTED,
            "semi-distributed": cls.SEMI_DISTRIBUTED,
            "fully": cls.FULLY_DISTRIBUTED,
            "fully-distributed": cls.FULLY_DISTRIBUTED,
            "asuman": cls.ASUMAN,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown policy {text!r}") from None


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one simulation run.

    ``capacity_b`` defaults to ``n * lam`` and ``burn_in`` to 10% of the
    horizon; both are filled in by :func:`validate_config`.
    """

    n: int
    lambda_e: float
    lam: float
    policy: PolicyKind
    horizon: float
    capacity_b: float | None = None
    delta: float | None = None
    burn_in: float | None = None
    seed: int = 0


def validate_config(cfg: SimConfig) -> SimConfig:
    if not isinstance(cfg.policy, PolicyKind):
        raise ConfigError(f"policy must be a PolicyKind, got {cfg.policy!r}")
    if int(cfg.n) != cfg.n or cfg.n < 1:
        raise NonPositiveRate(f"n must be a positive integer, got {cfg.n!r}")
    for name in ("lambda_e", "lam", "horizon"):
        value = getattr(cfg, name)
        if not (value > 0 and math.isfinite(value)):
            raise NonPositiveRate(f"{name} must be positive and finite, got {value!r}")
    capacity = cfg.capacity_b if cfg.capacity_b is not None else cfg.n * cfg.lam
    if not (capacity > 0 and math.isfinite(capacity)):
        raise NonPositiveRate(f"capacity_b must be positive, got {capacity!r}")
    if cfg.policy is PolicyKind.FULLY_DISTRIBUTED:
        if cfg.delta is None:
            raise MissingDelta("the fully-distributed policy needs a window length delta")
        if not (cfg.delta > 0 and math.isfinite(cfg.delta)):
            raise NonPositiveRate(f"delta must be positive, got {cfg.delta!r}")
    burn_in = cfg.burn_in if cfg.burn_in is not None else 0.1 * cfg.horizon
    if burn_in < 0:
        raise NonPositiveRate(f"burn_in must be non-negative, got {burn_in!r}")
    if burn_in >= cfg.horizon:
        raise BurnInExceedsHorizon(f"burn_in {burn_in} must be < horizon {cfg.horizon}")
    if not 0 <= cfg.seed <= MASK64:
        raise ConfigError(f"seed must fit in 64 unsigned bits, got {cfg.seed!r}")
    return dataclasses.replace(cfg, n=int(cfg.n), capacity_b=float(capacity), burn_in=float(burn_in))


@dataclass
class NetworkState:
    """Versions held by the source and every node, plus who is gossiping.

    ``gossipers`` is maintained by the active policy; ``window_end`` is only
    populated by the fully-distributed policy (node -> window close time).
    """

    node_versions: np.ndarray
    source_version: int = 0
    clock: float = 0.0
    gossipers: set[int] = field(default_factory=set)
    window_end: dict[int, float] = field(default_factory=dict)

    @classmethod
    def fresh(cls, n: int) -> NetworkState:
        return cls(node_versions=np.zeros(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return len(self.node_versions)

    def ages(self) -> np.ndarray:
        return self.source_version - self.node_versions

    def min_age(self) -> int:
        return int(self.source_version - self.node_versions.max())


def age_of(state: NetworkState, i: int) -> int:
    if not 0 <= i < state.n:
        raise IndexOutOfRange(f"node {i} outside 0..{state.n - 1}")
    return int(state.source_version - state.node_versions[i])


@dataclass
class AgeAccumulator:
    per_node_age_integral: np.ndarray
    min_age_integral: float = 0.0
    occupancy_integral: dict[int, float] = field(default_factory=dict)
    accumulated_time: float = 0.0

    @classmethod
    def zeros(cls, n: int) -> AgeAccumulator:
        return cls(per_node_age_integral=np.zeros(n))


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(root: int, index: int) -> int:
    """Seed of the ``index``-th independent stream under root seed ``root``."""
    return splitmix64((root + index) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
