"""Experiment configuration: one JSON document with a section per module."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..autoscaler import PROFILES, ScalingConfig
from ..cluster_sim import ClusterConfig, CostModel, LatencyModel
from ..forecaster import LstmConfig
from ..timeseries import ConfigError, FilterConfig
from ..workload import WorkloadProfile

TIERS = ("flexible", "moderate", "strict")
KINDS = ("GET", "POST")

DEFAULT_CONFIG = {
    "workload": {
        "base_rate": 150.0,
        "peaks": [
            {"center": 170.0, "width": 0.22, "amplitude": 1410.0},
            {"center": 300.0, "width": 0.18, "amplitude": 555.0},
            {"center": 430.0, "width": 0.15, "amplitude": 1920.0},
        ],
        "weekday_multipliers": [0.7, 0.7, 0.8, 1.0, 1.0, 1.0, 1.0],
        "noise_sigma": 0.1,
    },
    "cluster": {
        "nodes": [
            {"name": "control-plane-k8s", "layer": "cloud", "cpu_cores": 8, "memory_gb": 32},
            {"name": "control-plane-db", "layer": "cloud", "cpu_cores": 8, "memory_gb": 32},
            {"name": "data-plane-1", "layer": "edge", "cpu_cores": 2, "memory_gb": 4},
            {"name": "data-plane-2", "layer": "edge", "cpu_cores": 2, "memory_gb": 4},
            {"name": "data-plane-3", "layer": "edge", "cpu_cores": 2, "memory_gb": 4},
            {"name": "data-plane-4", "layer": "edge", "cpu_cores": 2, "memory_gb": 4},
        ],
        "node_shares": [0.32, 0.26, 0.22, 0.2],
        "share_jitter": 0.1,
        "capacity_per_pod": {"GET": 150.0, "POST": 150.0},
        "cold_start": {"deploy_s": 30.0, "register_s": 10.0, "interlayer_ms": 50.0},
    },
    "latency": {
        "GET": {"K_ms": 20.0, "U_ms": 400.0, "timeout_ms": 60000, "congestion_exponent": 5.0},
        "POST": {"K_ms": 20.0, "U_ms": 3600.0, "timeout_ms": 60000, "congestion_exponent": 5.0},
    },
    "cost": {"alpha": 1.0, "x": 0.5, "y": 0.5},
    "autoscaler": {
        "cpu_target": {"GET": 50.0, "POST": 60.0},
        "tolerance_threshold": 0.1,
        "min_replicas": 16,
        "max_replicas": 40,
        "forecast_lookahead_ticks": 1,
        "forecast_refresh_ticks": 1,
    },
    "forecaster": {
        "lookback": 10,
        "horizon": 540,
        "hidden": [50, 50, 50],
        "dropout": 0.2,
        "learning_rate": 0.005,
        "epochs": 75,
        "batch_size": 100,
        "early_stop_patience": 10,
        "validation_fraction": 0.2,
        "filter": {"width": 11, "order": 3},
        "ppa_hidden": [100, 100, 100],
        "ppa_preprocess": False,
        "feedback_window_ticks": 540,
    },
    "sla": {
        "GET": {"flexible": 150.0, "moderate": 125.0, "strict": 100.0},
        "POST": {"flexible": 1000.0, "moderate": 900.0, "strict": 800.0},
    },
    "scenario": {
        "policy": "hybrid",
        "tier": "flexible",
        "kind": "GET",
        "days": 5,
        "warmup_days": {"flexible": 0, "moderate": 3, "strict": 3},
        "seeds": [0, 1, 2, 3, 4],
    },
    "experiment": {
        "policies": ["default", "thpa", "ppa", "hybrid"],
        "tiers": ["flexible", "moderate", "strict"],
        "kinds": ["GET", "POST"],
    },
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and isinstance(value, dict) and key not in ("warmup_days",):
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(source=None, overrides: dict | None = None) -> dict:
    """Defaults, then the JSON file (path or dict), then ``overrides``."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if source is not None:
        if isinstance(source, dict):
            data = source
        else:
            try:
                data = json.loads(Path(source).read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{source}: invalid JSON ({exc})") from None
        cfg = _merge(cfg, data)
    if overrides:
        cfg = _merge(cfg, overrides)
    return cfg


@dataclass(frozen=True)
class SlaPolicy:
    tier: str
    get_threshold_ms: float
    post_threshold_ms: float

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ConfigError(f"unknown SLA tier {self.tier!r}; expected one of {TIERS}")

    def threshold(self, kind: str) -> float:
        if kind == "GET":
            return self.get_threshold_ms
        if kind == "POST":
            return self.post_threshold_ms
        raise ConfigError(f"unknown request kind {kind!r}")


def sla_policy(cfg: dict, tier: str) -> SlaPolicy:
    if tier not in TIERS:
        raise ConfigError(f"unknown SLA tier {tier!r}; expected one of {TIERS}")
    sla = cfg["sla"]
    for kind in KINDS:
        values = [sla[kind][t] for t in TIERS]
        if not values[2] < values[1] < values[0]:
            raise ConfigError(f"sla.{kind}: thresholds must satisfy strict < moderate < flexible")
    return SlaPolicy(tier, sla["GET"][tier], sla["POST"][tier])


@dataclass(frozen=True)
class ScenarioConfig:
    policy: str
    tier: str
    kind: str
    days: int
    warmup_days: int
    seeds: tuple
    workload: WorkloadProfile
    cluster: ClusterConfig
    latency: LatencyModel
    cost: CostModel
    scaling: ScalingConfig
    lstm: LstmConfig
    sla: SlaPolicy
    forecast_lookahead_ticks: int = 1
    forecast_refresh_ticks: int = 1
    feedback_window_ticks: int = 540
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.days < 1:
            raise ConfigError("scenario.days must be at least 1")
        if not 0 <= self.warmup_days < self.days:
            raise ConfigError("measurement window must fit inside the run (0 <= warmup_days < days)")
        if not self.seeds:
            raise ConfigError("scenario.seeds must not be empty")

    @property
    def sla_threshold_ms(self) -> float:
        return self.sla.threshold(self.kind)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seeds=(int(seed),))

    def label(self) -> str:
        return f"{self.policy}-{self.tier}-{self.kind}"


def scenario_from_config(cfg: dict, policy: str | None = None, tier: str | None = None,
                         kind: str | None = None, seeds=None) -> ScenarioConfig:
    sc = cfg["scenario"]
    policy = policy or sc["policy"]
    tier = tier or sc["tier"]
    kind = kind or sc["kind"]
    if policy not in PROFILES:
        raise ConfigError(f"unknown policy {policy!r} (scenario.policy); expected one of {sorted(PROFILES)}")
    if tier not in TIERS:
        raise ConfigError(f"unknown SLA tier {tier!r} (scenario.tier); expected one of {list(TIERS)}")
    if kind not in KINDS:
        raise ConfigError(f"unknown request kind {kind!r} (scenario.kind); expected one of {list(KINDS)}")
    seeds = tuple(int(s) for s in (seeds if seeds is not None else sc["seeds"]))

    try:
        workload = WorkloadProfile(seed=seeds[0], **cfg["workload"])
        cl = dict(cfg["cluster"])
        cap = cl.pop("capacity_per_pod")
        cl["capacity_per_pod"] = cap[kind] if isinstance(cap, dict) else cap
        cluster = ClusterConfig(**cl)
        latency = LatencyModel(**cfg["latency"][kind])
        cost = CostModel(**cfg["cost"])
        a = cfg["autoscaler"]
        target = a["cpu_target"][kind] if isinstance(a["cpu_target"], dict) else a["cpu_target"]
        scaling = ScalingConfig(metric_desired=target, tolerance_threshold=a["tolerance_threshold"],
                                min_replicas=a["min_replicas"], max_replicas=a["max_replicas"])
        f = dict(cfg["forecaster"])
        ppa_hidden = f.pop("ppa_hidden")
        ppa_pre = f.pop("ppa_preprocess")
        window = f.pop("feedback_window_ticks")
        f["filter"] = FilterConfig(**f["filter"])
        lstm = LstmConfig(**f)
        if policy == "ppa":
            lstm = replace(lstm, hidden=tuple(ppa_hidden), preprocess=ppa_pre)
    except TypeError as exc:
        raise ConfigError(f"bad config section: {exc}") from None
    return ScenarioConfig(
        policy=policy, tier=tier, kind=kind, days=int(sc["days"]),
        warmup_days=int(sc["warmup_days"][tier]), seeds=seeds, workload=workload,
        cluster=cluster, latency=latency, cost=cost, scaling=scaling, lstm=lstm,
        sla=sla_policy(cfg, tier), forecast_lookahead_ticks=int(a["forecast_lookahead_ticks"]),
        forecast_refresh_ticks=int(a["forecast_refresh_ticks"]),
        feedback_window_ticks=int(window), raw=cfg)
