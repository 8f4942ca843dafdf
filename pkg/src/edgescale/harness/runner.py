"""Scenario orchestration: workload -> controller -> cluster, plus reports."""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..autoscaler import Controller, decision_trace_csv, get_profile, violation_window_count
from ..cluster_sim import ClusterSim, minmax, node_share_schedule, objective, reports_to_csv
from ..forecaster import FeedbackTuner, Forecaster
from ..timeseries import TICKS_PER_DAY, ConfigError, MetricSeries, MetricStore, series_to_csv
from ..workload import generate_trace
from .config import ScenarioConfig

PROACTIVE = ("ppa", "hybrid")
# samples handed to the rolling re-prediction (covers lookback and filter width)
REFRESH_TAIL = 64


@dataclass
class RunReport:
    scenario: str
    policy: str
    tier: str
    kind: str
    seed: int
    window_start: int
    window_end: int
    total_requests: int
    violations: int
    violation_pct: float
    mean_latency_ms: float
    mean_cpu_pct: float
    total_cost: float
    objective: float
    trace_digest: str
    ticks: list = field(default_factory=list, repr=False)
    decisions: list = field(default_factory=list, repr=False)
    hyper_trace: list = field(default_factory=list)
    forecast_history: list = field(default_factory=list, repr=False)
    daily_violations: list = field(default_factory=list)
    csv_paths: dict = field(default_factory=dict)
    elapsed_s: float = 0.0

    def summary(self) -> dict:
        keys = ("scenario", "policy", "tier", "kind", "seed", "window_start", "window_end",
                "total_requests", "violations", "violation_pct", "mean_latency_ms",
                "mean_cpu_pct", "total_cost", "objective", "trace_digest",
                "daily_violations", "hyper_trace", "csv_paths")
        return {k: getattr(self, k) for k in keys}

    # CSV renderings, all deterministic text
    def tick_csv(self) -> str:
        return reports_to_csv(self.ticks)

    def decision_csv(self) -> str:
        return decision_trace_csv(self.decisions, [r.breach for r in self.ticks])

    def figure_csvs(self) -> dict:
        def two_col(values):
            s = MetricSeries.from_values(np.round(values, 6), 0)
            return series_to_csv(s)
        return {
            "latency_ms": two_col([r.latency_ms for r in self.ticks]),
            "cpu_pct": two_col([r.cpu_pct for r in self.ticks]),
            "replicas": two_col([r.ready_pods + r.starting_pods for r in self.ticks]),
            "requests": two_col([r.requests for r in self.ticks]),
        }


def trace_digest(values) -> str:
    return hashlib.sha256(np.asarray(values, dtype=np.float64).tobytes()).hexdigest()


def _forecast_metric(forecaster, tick, lookahead, current, capacity):
    """CPU percent the forecast load would put on the current replicas."""
    if forecaster is None:
        return None
    values = [forecaster.value_at(tick + k) for k in range(lookahead + 1)]
    values = [v for v in values if v is not None]
    if not values:
        return None
    return 100.0 * max(values) / (max(current, 1) * capacity)


def run_scenario(cfg: ScenarioConfig, seed: int | None = None, cache: dict | None = None,
                 trace: MetricSeries | None = None, forecast_hook=None) -> RunReport:
    """Simulate one (policy, tier, kind, seed) combination.

    ``trace`` replaces the generated workload (used for scripted checks);
    ``cache`` is handed to the forecaster to memoize identical cycles;
    ``forecast_hook(day, forecaster)`` runs after every daily cycle.
    """
    started = time.perf_counter()
    seed = cfg.seeds[0] if seed is None else int(seed)
    profile = get_profile(cfg.policy)
    warm_profile = get_profile("default")
    n_ticks = cfg.days * TICKS_PER_DAY
    if trace is None:
        trace = generate_trace(replace(cfg.workload, seed=seed), cfg.days)
    if len(trace) < n_ticks:
        raise ConfigError(f"trace has {len(trace)} ticks, scenario needs {n_ticks}")
    requests = trace.values[:n_ticks].astype(np.int64)
    shares = node_share_schedule(cfg.cluster, n_ticks, seed)

    sim = ClusterSim(cfg.cluster, cfg.latency, cfg.cost, cfg.sla_threshold_ms,
                     profile.placement, cfg.scaling.min_replicas, cfg.scaling.metric_desired)
    controller = Controller(profile, cfg.scaling, cfg.tier)
    forecaster = Forecaster(cfg.lstm, seed, cache) if cfg.policy in PROACTIVE else None
    tuner = FeedbackTuner(cfg.lstm) if cfg.policy == "hybrid" else None
    store = MetricStore(unit="requests")
    warmup_ticks = cfg.warmup_days * TICKS_PER_DAY
    capacity = cfg.cluster.capacity_per_pod

    reports = []
    hyper = []
    for tick in range(n_ticks):
        if tick % TICKS_PER_DAY == 0 and tick > 0 and forecaster is not None:
            day = tick // TICKS_PER_DAY
            if tuner is not None and day - 1 >= cfg.warmup_days:
                v = violation_window_count(controller.log, cfg.feedback_window_ticks)
                forecaster.cfg = tuner.observe(v)
                hyper.append(dict(day=day, violations=v,
                                  learning_rate=forecaster.cfg.learning_rate,
                                  batch_size=forecaster.cfg.batch_size,
                                  epochs=forecaster.cfg.epochs))
            forecaster.run_cycle(store.snapshot())
            if forecast_hook is not None:
                forecast_hook(day, forecaster)
        if (forecaster is not None and cfg.forecast_refresh_ticks > 0 and tick > 0
                and tick % cfg.forecast_refresh_ticks == 0 and forecaster.model is not None):
            forecaster.refresh(store.tail_series(REFRESH_TAIL))
        active = tick >= warmup_ticks
        current = sim.replica_count()
        metric_f = None
        if active and profile.proactive:
            metric_f = _forecast_metric(forecaster, tick, cfg.forecast_lookahead_ticks,
                                        current, capacity)
        # the reactive path only knows utilization measured over the last tick
        metric_c = reports[-1].cpu_pct if reports else None
        decision = controller.decide(tick, current, metric_c, metric_f,
                                     None if active else warm_profile)
        rep = sim.step(tick, int(requests[tick]), decision, shares[tick])
        controller.record_outcome(tick, rep.breach)
        store.append(tick, rep.requests)
        reports.append(rep)

    window = reports[warmup_ticks:]
    total = sum(r.requests for r in window)
    violations = sum(r.breach for r in window)
    lat = np.array([r.latency_ms for r in window])
    cost = np.array([r.cost for r in window])
    obj = float(np.mean(objective(minmax(lat), minmax(cost), cfg.cost.x, cfg.cost.y)))
    daily = [sum(r.breach for r in reports[d * TICKS_PER_DAY:(d + 1) * TICKS_PER_DAY])
             for d in range(cfg.days)]
    return RunReport(
        scenario=cfg.label(), policy=cfg.policy, tier=cfg.tier, kind=cfg.kind, seed=seed,
        window_start=warmup_ticks, window_end=n_ticks, total_requests=int(total),
        violations=int(violations),
        violation_pct=100.0 * violations / total if total else 0.0,
        mean_latency_ms=float(lat.mean()), mean_cpu_pct=float(np.mean([r.cpu_pct for r in window])),
        total_cost=float(cost.sum()), objective=obj, trace_digest=trace_digest(requests),
        ticks=reports, decisions=controller.records, hyper_trace=hyper,
        forecast_history=[] if forecaster is None else forecaster.history,
        daily_violations=daily, elapsed_s=time.perf_counter() - started)


def seed_statistics(values) -> tuple[float, float]:
    arr = np.asarray(values, float)
    if arr.size == 0:
        return math.nan, math.nan
    return float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0
