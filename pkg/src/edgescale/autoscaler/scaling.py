"""Replica arithmetic: ratio rule, tolerance and cooldown gates, hybrid max, placement."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from ..timeseries import TICK_SECONDS, ConfigError

# absorbs float noise such as 3 * 0.7 / 0.35 = 6.000000000000001
_CEIL_SLACK = 1e-9


class Gate(str, Enum):
    SKIP = "skip"
    PROCEED = "proceed"
    ALLOW = "allow"
    BLOCK = "block"


class Source(str, Enum):
    REACTIVE = "reactive"
    FORECAST = "forecast"
    SKIPPED = "skipped-by-tolerance"
    BLOCKED = "blocked-by-cooldown"


@dataclass(frozen=True)
class ScalingConfig:
    metric_desired: float = 60.0
    tolerance_threshold: float = 0.1
    scale_up_cooldown_s: int = 0
    scale_down_cooldown_s: int = 300
    min_replicas: int = 1
    max_replicas: int = 40
    tick_seconds: int = TICK_SECONDS

    def __post_init__(self):
        if self.metric_desired <= 0:
            raise ConfigError("metric_desired must be positive")
        if self.min_replicas < 1 or self.max_replicas < self.min_replicas:
            raise ConfigError("need 1 <= min_replicas <= max_replicas")
        if self.scale_up_cooldown_s < 0 or self.scale_down_cooldown_s < 0:
            raise ConfigError("cooldowns must be non-negative")
        if self.tolerance_threshold < 0:
            raise ConfigError("tolerance_threshold must be non-negative")

    def cooldown_ticks(self, direction: str) -> int:
        seconds = self.scale_up_cooldown_s if direction == "up" else self.scale_down_cooldown_s
        return math.ceil(seconds / self.tick_seconds)

    def clamp(self, replicas: int) -> int:
        return max(self.min_replicas, min(self.max_replicas, int(replicas)))


@dataclass(frozen=True)
class ScalingDecision:
    desired_replicas: int
    source: Source
    tick: int = 0


def raw_replicas(current: int, metric_current: float, metric_desired: float) -> int:
    """Unclamped ``ceil(current * metric_current / metric_desired)``."""
    if metric_desired <= 0:
        raise ConfigError(f"metric_desired must be positive, got {metric_desired}")
    return math.ceil(current * metric_current / metric_desired - _CEIL_SLACK)


def desired_replicas(current: int, metric_current: float, metric_desired: float,
                     min_replicas: int = 1, max_replicas: int | None = None) -> int:
    r = max(raw_replicas(current, metric_current, metric_desired), min_replicas)
    return r if max_replicas is None else min(r, max_replicas)


def tolerance_ratio(metric_current: float, metric_desired: float) -> float:
    if metric_desired <= 0:
        raise ConfigError(f"metric_desired must be positive, got {metric_desired}")
    return abs((metric_desired - metric_current) / metric_desired)


def tolerance_gate(metric_current: float, metric_desired: float, threshold: float = 0.1) -> Gate:
    if tolerance_ratio(metric_current, metric_desired) < threshold:
        return Gate.SKIP
    return Gate.PROCEED


def cooldown_gate(last_scale_up_tick: int | None, last_scale_down_tick: int | None,
                  now: int, direction: str, cfg: ScalingConfig) -> Gate:
    """Block while fewer than the cooldown's ticks (rounded up) have passed."""
    if direction not in ("up", "down"):
        raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")
    last = last_scale_up_tick if direction == "up" else last_scale_down_tick
    if last is not None and now - last < cfg.cooldown_ticks(direction):
        return Gate.BLOCK
    return Gate.ALLOW


def hybrid_schedule(current: int, metric_current: float, metric_desired: float,
                    metric_forecast: float | None, tick: int = 0,
                    min_replicas: int = 1, max_replicas: int | None = None) -> ScalingDecision:
    """Larger of the forecast and reactive replica counts; ties go reactive."""
    reactive = desired_replicas(current, metric_current, metric_desired, min_replicas, max_replicas)
    if metric_forecast is None:
        return ScalingDecision(reactive, Source.REACTIVE, tick)
    forecast = desired_replicas(current, metric_forecast, metric_desired, min_replicas, max_replicas)
    if forecast > reactive:
        return ScalingDecision(forecast, Source.FORECAST, tick)
    return ScalingDecision(reactive, Source.REACTIVE, tick)


def thpa_allocate(total_desired: int, shares) -> list[int]:
    """Split replicas across nodes in proportion to request share.

    Largest-remainder rounding; ties on the remainder go to the lower node
    index.  All-zero shares fall back to round-robin.
    """
    shares = [float(s) for s in shares]
    n = len(shares)
    if n == 0:
        raise ValueError("need at least one node")
    if total_desired < 0:
        raise ValueError("total_desired must be non-negative")
    if any(s < 0 for s in shares):
        raise ValueError("shares must be non-negative")
    s_sum = sum(shares)
    if s_sum == 0:
        return [total_desired // n + (1 if i < total_desired % n else 0) for i in range(n)]
    quotas = [total_desired * s / s_sum for s in shares]
    alloc = [math.floor(q) for q in quotas]
    left = total_desired - sum(alloc)
    order = sorted(range(n), key=lambda i: (-(quotas[i] - alloc[i]), i))
    for i in order[:left]:
        alloc[i] += 1
    return alloc
