"""Stand-alone M/D/inf occupancy simulation.

Every arrival holds its own server for exactly ``delta``, unlike the
network policy where a re-updated node restarts its single window.  The
two are compared in the tests to measure that modelling gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytics import mg_infty_stationary
from .core import GossipError, NonPositiveRate, make_rng


class UnnormalizedHistogram(GossipError, ValueError):
    pass


@dataclass(frozen=True)
class QueueTrace:
    arrivals: np.ndarray
    delta: float
    horizon: float
    change_times: np.ndarray  # occupancy is occupancy[j] on [change_times[j], change_times[j+1])
    occupancy: np.ndarray

    def occupancy_at(self, t: float) -> int:
        j = np.searchsorted(self.change_times, t, side="right") - 1
        return int(self.occupancy[j])

    def histogram(self) -> np.ndarray:
        durations = np.diff(np.append(self.change_times, self.horizon))
        return np.bincount(self.occupancy, weights=durations) / self.horizon


def trace_mdinf(lam: float, delta: float, horizon: float, seed: int) -> QueueTrace:
    for name, value in (("lam", lam), ("delta", delta), ("horizon", horizon)):
        if not value > 0:
            raise NonPositiveRate(f"{name} must be positive, got {value!r}")
    rng = make_rng(seed)
    expected = lam * horizon
    count = rng.poisson(expected)
    # conditional on the count, Poisson arrival times are iid uniform
    arrivals = np.sort(rng.uniform(0.0, horizon, size=count))
    departures = arrivals + delta
    departures = departures[departures < horizon]
    times = np.concatenate(([0.0], arrivals, departures))
    steps = np.concatenate(([0], np.ones(len(arrivals), dtype=np.int64), -np.ones(len(departures), dtype=np.int64)))
    order = np.argsort(times, kind="stable")
    change_times = times[order]
    occupancy = np.cumsum(steps[order])
    return QueueTrace(arrivals, float(delta), float(horizon), change_times, occupancy)


def simulate_mdinf(lam: float, delta: float, horizon: float, seed: int = 0) -> np.ndarray:
    """Fraction of ``[0, horizon]`` spent with exactly k customers, k = 0..k_max."""
    return trace_mdinf(lam, delta, horizon, seed).histogram()


def compare_to_stationary(histogram, rho: float, atol: float = 1e-9) -> float:
    """Total-variation distance between ``histogram`` and Poisson(``rho``)."""
    p = np.asarray(histogram, dtype=float)
    if np.any(p < -atol) or abs(p.sum() - 1.0) > atol:
        raise UnnormalizedHistogram(f"histogram sums to {p.sum():.12g}, expected 1")
    pi = np.array([mg_infty_stationary(rho, k) for k in range(len(p))])
    tail = max(0.0, 1.0 - pi.sum())
    return 0.5 * (float(np.abs(p - pi).sum()) + tail)


@dataclass(frozen=True)
class QueueCheck:
    rho: float
    lam: float
    delta: float
    horizon: float
    histogram: np.ndarray
    tv_distance: float
    tv_tolerance: float

    @property
    def mean_occupancy(self) -> float:
        return float(np.dot(np.arange(len(self.histogram)), self.histogram))

    @property
    def p1(self) -> float:
        return float(self.histogram[1]) if len(self.histogram) > 1 else 0.0

    @property
    def p1_expected(self) -> float:
        return mg_infty_stationary(self.rho, 1)

    @property
    def passed(self) -> bool:
        return self.tv_distance < self.tv_tolerance


def queue_check(
    rho: float, lam: float = 1.0, horizon: float = 1e5, seed: int = 0, tv_tolerance: float = 0.01
) -> QueueCheck:
    """Simulate an M/D/inf queue with load ``rho`` and compare it to the Poisson law."""
    if not rho > 0 or not math.isfinite(rho):
        raise NonPositiveRate(f"rho must be positive, got {rho!r}")
    delta = rho / lam
    hist = simulate_mdinf(lam, delta, horizon, seed)
    return QueueCheck(rho, lam, delta, horizon, hist, compare_to_stationary(hist, rho), tv_tolerance)
