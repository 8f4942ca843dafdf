"""Per-tick controller: policy profiles, decision bookkeeping and the violation log."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

from ..timeseries import ConfigError
from .scaling import (Gate, ScalingConfig, ScalingDecision, Source, cooldown_gate,
                      desired_replicas, tolerance_gate)


@dataclass(frozen=True)
class PolicyProfile:
    name: str
    placement: str              # round_robin | traffic_aware
    reactive: bool
    proactive: bool
    scale_up_cooldown_s: int
    scale_down_cooldown_s: int


PROFILES = {
    "default": PolicyProfile("default", "round_robin", True, False, 0, 300),
    "thpa": PolicyProfile("thpa", "traffic_aware", True, False, 0, 300),
    # only the default autoscaler is blind to where requests land
    "ppa": PolicyProfile("ppa", "traffic_aware", False, True, 0, 300),
    "hybrid": PolicyProfile("hybrid", "traffic_aware", True, True, 15, 15),
}


def get_profile(name: str) -> PolicyProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown policy {name!r}; expected one of {sorted(PROFILES)}") from None


@dataclass
class ViolationLog:
    """Per-tick breach record.

    ``counts`` holds the number of breaching requests per tick, ``flags``
    whether the tick breached at all.  The windowed count V is over flags.
    """

    tier: str = ""
    ticks: list = field(default_factory=list)
    counts: list = field(default_factory=list)

    def record(self, tick: int, breached_requests: int) -> None:
        self.ticks.append(int(tick))
        self.counts.append(int(breached_requests))

    @property
    def flags(self) -> list[bool]:
        return [c > 0 for c in self.counts]

    def __len__(self) -> int:
        return len(self.counts)

    def window_count(self, window_ticks: int) -> int:
        if window_ticks <= 0:
            return 0
        return sum(1 for c in self.counts[-window_ticks:] if c > 0)

    def totals(self) -> dict:
        return {"tier": self.tier, "breach_ticks": sum(self.flags),
                "breached_requests": sum(self.counts)}


def violation_window_count(log: ViolationLog, window_ticks: int) -> int:
    """Breach ticks in the trailing window; a short log counts what exists."""
    return log.window_count(window_ticks)


@dataclass(frozen=True)
class DecisionRecord:
    tick: int
    policy: str
    source: str
    replicas: int
    metric: float


class Controller:
    """Chooses the replica count each tick for one deployment.

    Order per tick: tolerance gate on each branch, policy arithmetic,
    cooldown gate, clamp.  ``decide`` may be handed a different profile
    for a single tick (e.g. default logic during a warmup period); the
    cooldown bookkeeping is shared.
    """

    def __init__(self, profile: PolicyProfile | str, cfg: ScalingConfig, tier: str = ""):
        self.profile = get_profile(profile) if isinstance(profile, str) else profile
        self.cfg = cfg
        self.last_up: int | None = None
        self.last_down: int | None = None
        self.log = ViolationLog(tier)
        self.records: list[DecisionRecord] = []

    def config_for(self, profile: PolicyProfile) -> ScalingConfig:
        return replace(self.cfg, scale_up_cooldown_s=profile.scale_up_cooldown_s,
                       scale_down_cooldown_s=profile.scale_down_cooldown_s)

    def _branch(self, current: int, metric: float | None, cfg: ScalingConfig, source: Source):
        if metric is None:
            return None
        if tolerance_gate(metric, cfg.metric_desired, cfg.tolerance_threshold) is Gate.SKIP:
            return current, Source.SKIPPED
        r = desired_replicas(current, metric, cfg.metric_desired, cfg.min_replicas, cfg.max_replicas)
        return r, source

    def decide(self, tick: int, current: int, metric_current: float | None,
               metric_forecast: float | None = None,
               profile: PolicyProfile | None = None) -> ScalingDecision:
        prof = profile or self.profile
        cfg = self.config_for(prof)
        forecast = self._branch(current, metric_forecast, cfg, Source.FORECAST) if prof.proactive else None
        reactive = self._branch(current, metric_current, cfg, Source.REACTIVE) if prof.reactive else None

        if reactive is not None and forecast is not None:
            # strict ">" so ties go to the reactive branch
            replicas, source = forecast if forecast[0] > reactive[0] else reactive
        elif reactive is not None:
            replicas, source = reactive
        elif forecast is not None:
            replicas, source = forecast
        elif prof.reactive:
            replicas, source = current, Source.SKIPPED      # no measurement yet
        else:
            replicas, source = current, Source.FORECAST     # proactive only, no forecast: hold

        if replicas != current:
            direction = "up" if replicas > current else "down"
            if cooldown_gate(self.last_up, self.last_down, tick, direction, cfg) is Gate.BLOCK:
                replicas, source = current, Source.BLOCKED
        replicas = cfg.clamp(replicas)
        if replicas > current:
            self.last_up = tick
        elif replicas < current:
            self.last_down = tick
        metric = metric_current if metric_current is not None else float("nan")
        self.records.append(DecisionRecord(tick, prof.name, source.value, replicas, metric))
        return ScalingDecision(replicas, source, tick)

    def record_outcome(self, tick: int, breached_requests: int) -> None:
        self.log.record(tick, breached_requests)


def controller_tick(controller: Controller, tick: int, current: int, metric_current,
                    metric_forecast=None, profile: PolicyProfile | None = None) -> ScalingDecision:
    return controller.decide(tick, current, metric_current, metric_forecast, profile)


def decision_trace_csv(records, breaches) -> str:
    """CSV ``tick,policy,source,replicas,metric,breach``; one row per decision."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tick", "policy", "source", "replicas", "metric", "breach"])
    for rec, breach in zip(records, breaches):
        w.writerow([rec.tick, rec.policy, rec.source, rec.replicas, f"{rec.metric:.6f}", int(breach)])
    return buf.getvalue()
