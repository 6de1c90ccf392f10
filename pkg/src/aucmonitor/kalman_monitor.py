"""One-dimensional Kalman filter over windowed AUC observations.

The prior variance for each window is re-scaled by that window's class
counts, ``p_pred = s10/m + s01/n``, so a window with few positives is
trusted less even when the carried state is unchanged. There is no
process noise; the state is constant between windows.

Two rules for carrying the variance components forward are provided:

``"state"`` (default)
    ``s10 <- (1 - K) * s10`` using the carried components. The components
    never grow, so the gain decays as evidence accumulates.
``"window"``
    ``s10 <- (1 - K) * S10_t`` using the current window's own DeLong
    components. The gain settles near a constant, giving a filter that
    keeps adapting.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from .roc_metrics import DEFAULT_MIN_POSITIVES, DelongEstimate, ScoredBatch, delong

log = logging.getLogger(__name__)

Z_95 = 1.96
STRATEGIES = ("state", "window")


class FilterInputError(ValueError):
    pass


class WindowOrderError(ValueError):
    pass


@dataclass(frozen=True)
class Observation:
    """One window's raw AUC ``z`` and its variance ``r``.

    ``s10``/``s01`` are the window's own variance components; they are
    only consulted by the ``"window"`` update rule.
    """

    window_id: str
    z: float
    r: float
    m: int
    n: int
    used_upper_bound: bool = False
    s10: float = 1.0
    s01: float = 1.0

    @classmethod
    def from_estimate(cls, window_id: str, est: DelongEstimate) -> "Observation":
        return cls(
            str(window_id), est.theta, est.variance, est.m, est.n,
            est.used_upper_bound, est.s10, est.s01,
        )


@dataclass(frozen=True)
class FilterState:
    theta: float
    s10: float
    s01: float
    p: float
    step_count: int = 0

    def to_snapshot(self) -> str:
        """Plain ``key=value`` lines, one per field."""
        return (
            f"theta={self.theta!r}\ns10={self.s10!r}\ns01={self.s01!r}\n"
            f"p={self.p!r}\nstep_count={self.step_count}\n"
        )

    @classmethod
    def from_snapshot(cls, text: str) -> "FilterState":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"line {lineno}: expected key=value")
            values[key.strip()] = val.strip()
        expected = {"theta", "s10", "s01", "p", "step_count"}
        if set(values) != expected:
            raise ValueError(f"snapshot keys {sorted(values)} != {sorted(expected)}")
        return cls(
            float(values["theta"]), float(values["s10"]), float(values["s01"]),
            float(values["p"]), int(values["step_count"]),
        )


@dataclass(frozen=True)
class FilterStep:
    predicted_variance: float
    gain: float
    posterior: FilterState


@dataclass(frozen=True)
class MonitorRecord:
    """One output row. Values are ``None`` when undefined (e.g. a skipped
    window before any state exists)."""

    window_id: str
    raw: Optional[float]
    raw_ci_low: Optional[float]
    raw_ci_high: Optional[float]
    filtered: Optional[float]
    filtered_ci_low: Optional[float]
    filtered_ci_high: Optional[float]
    m: int
    n: int
    gain: Optional[float]
    used_upper_bound: bool
    skipped: bool = False
    filtered_variance: Optional[float] = None


def init_state(baseline: DelongEstimate) -> FilterState:
    if baseline.m < 1 or baseline.n < 1:
        raise FilterInputError("baseline needs at least one sample per class")
    return FilterState(baseline.theta, baseline.s10, baseline.s01, baseline.variance, 0)


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


def step(state: FilterState, obs: Observation, strategy: str = "state") -> FilterStep:
    """Advance the filter by one window."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown update strategy {strategy!r}")
    if not _finite(state.theta, state.s10, state.s01, state.p, obs.z, obs.r, obs.s10, obs.s01):
        raise FilterInputError("invalid filter input")
    if obs.m < 1 or obs.n < 1 or obs.r < 0:
        raise FilterInputError("invalid filter input")

    p_pred = state.s10 / obs.m + state.s01 / obs.n
    denom = p_pred + obs.r
    gain = p_pred / denom if denom > 0 else 0.0
    theta = state.theta + gain * (obs.z - state.theta)
    keep = 1.0 - gain
    if strategy == "state":
        s10, s01 = keep * state.s10, keep * state.s01
    else:
        s10, s01 = keep * obs.s10, keep * obs.s01
    posterior = FilterState(theta, s10, s01, keep * p_pred, state.step_count + 1)
    return FilterStep(p_pred, gain, posterior)


def confidence_interval(mean: float, variance: float) -> tuple[float, float]:
    """Normal 95% interval clipped to [0, 1]."""
    if variance < 0 or math.isnan(variance):
        raise ValueError("variance must be non-negative")
    half = Z_95 * math.sqrt(variance)
    return max(0.0, mean - half), min(1.0, mean + half)


def _order_key(window_id: str):
    try:
        return (0, int(window_id), "")
    except ValueError:
        return (1, 0, window_id)


class Monitor:
    """Sequential driver turning observations into :class:`MonitorRecord` rows.

    Without a baseline the first observation seeds the state and is
    reported unfiltered.
    """

    def __init__(
        self,
        baseline: Optional[DelongEstimate] = None,
        strategy: str = "state",
        state: Optional[FilterState] = None,
    ):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown update strategy {strategy!r}")
        if baseline is not None and state is not None:
            raise ValueError("pass either a baseline or a resumed state, not both")
        self.strategy = strategy
        self.state: Optional[FilterState] = init_state(baseline) if baseline is not None else state
        self._last_key = None

    def _check_order(self, window_id: str) -> None:
        key = _order_key(window_id)
        if self._last_key is not None and key <= self._last_key:
            raise WindowOrderError("non-monotonic window sequence")
        self._last_key = key

    def update(self, obs: Observation) -> MonitorRecord:
        self._check_order(obs.window_id)
        raw_lo, raw_hi = confidence_interval(obs.z, obs.r)
        if self.state is None:
            self.state = FilterState(obs.z, obs.s10, obs.s01, obs.r, 0)
            gain = 1.0
        else:
            result = step(self.state, obs, self.strategy)
            self.state = result.posterior
            gain = result.gain
        lo, hi = confidence_interval(self.state.theta, self.state.p)
        return MonitorRecord(
            obs.window_id, obs.z, raw_lo, raw_hi, self.state.theta, lo, hi,
            obs.m, obs.n, gain, obs.used_upper_bound, False, self.state.p,
        )

    def skip(self, window_id: str, m: int, n: int) -> MonitorRecord:
        """Record a window with no usable AUC; the state is carried forward."""
        self._check_order(window_id)
        log.warning("window %s has m=%d n=%d: AUC undefined, carrying state forward", window_id, m, n)
        if self.state is None:
            return MonitorRecord(window_id, None, None, None, None, None, None, m, n, None, False, True)
        lo, hi = confidence_interval(self.state.theta, self.state.p)
        return MonitorRecord(
            window_id, None, None, None, self.state.theta, lo, hi, m, n, 0.0, False, True, self.state.p,
        )


def run_filter(
    baseline: Optional[DelongEstimate],
    observations: Sequence[Observation],
    strategy: str = "state",
) -> list[MonitorRecord]:
    if not observations:
        raise FilterInputError("no observations")
    mon = Monitor(baseline, strategy)
    return [mon.update(obs) for obs in observations]


def monitor_batches(
    windows: Iterable[tuple[str, ScoredBatch]],
    baseline: Optional[DelongEstimate] = None,
    min_positives: int = DEFAULT_MIN_POSITIVES,
    strategy: str = "state",
    monitor: Optional[Monitor] = None,
) -> Iterator[MonitorRecord]:
    """Estimate and filter a stream of ``(window_id, batch)`` pairs.

    Windows missing a class produce a skipped record. Pass ``monitor`` to
    continue an existing stream (``baseline`` and ``strategy`` are then
    ignored).
    """
    mon = monitor if monitor is not None else Monitor(baseline, strategy)
    for window_id, batch in windows:
        if batch.m == 0 or batch.n == 0:
            yield mon.skip(window_id, batch.m, batch.n)
            continue
        yield mon.update(Observation.from_estimate(window_id, delong(batch, min_positives)))


__all__ = [
    "Observation", "FilterState", "FilterStep", "MonitorRecord", "Monitor",
    "init_state", "step", "confidence_interval", "run_filter", "monitor_batches",
    "STRATEGIES", "FilterInputError", "WindowOrderError",
]
