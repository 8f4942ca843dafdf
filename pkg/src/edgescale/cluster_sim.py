"""Tick-driven simulation of a two-layer cloud/edge cluster.

Each tick the simulator applies the controller's replica decision, moves
pods through their lifecycle, routes the tick's requests to edge nodes,
serves what ready (and partially warmed) capacity allows, queues or drops
the rest, and reports utilization, latency, SLA breaches and cost.

Requests arrive at edge nodes according to a per-node share vector.  A
node with no live pods forwards its traffic to the nodes that have pods,
in proportion to their pod counts.  Overflow a node cannot serve waits in
a queue bounded by what the node can clear within the request timeout;
anything beyond is dropped.  Queued requests are served first next tick.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .autoscaler.scaling import ScalingDecision, thpa_allocate
from .timeseries import TICK_SECONDS, ConfigError


@dataclass(frozen=True)
class NodeSpec:
    name: str
    layer: str          # cloud | edge
    cpu_cores: int
    memory_gb: int

    def __post_init__(self):
        if self.layer not in ("cloud", "edge"):
            raise ConfigError(f"node layer must be 'cloud' or 'edge', got {self.layer!r}")
        if self.cpu_cores <= 0 or self.memory_gb <= 0:
            raise ConfigError("node resources must be positive")


DEFAULT_NODES = (
    NodeSpec("control-plane-k8s", "cloud", 8, 32),
    NodeSpec("control-plane-db", "cloud", 8, 32),
    NodeSpec("data-plane-1", "edge", 2, 4),
    NodeSpec("data-plane-2", "edge", 2, 4),
    NodeSpec("data-plane-3", "edge", 2, 4),
    NodeSpec("data-plane-4", "edge", 2, 4),
)


class Phase(str, Enum):
    PENDING = "pending"
    COLD_STARTING = "cold_starting"
    READY = "ready"
    TERMINATING = "terminating"


_NEXT_PHASE = {
    Phase.PENDING: Phase.COLD_STARTING,
    Phase.COLD_STARTING: Phase.READY,
    Phase.READY: Phase.TERMINATING,
}


@dataclass
class Pod:
    id: int
    node: int               # index into the edge-node list
    created_tick: int
    ready_at_tick: int
    phase: Phase = Phase.PENDING

    def advance(self, to: Phase) -> None:
        if _NEXT_PHASE.get(self.phase) is not to:
            raise RuntimeError(f"illegal pod transition {self.phase.value} -> {to.value}")
        self.phase = to

    @property
    def live(self) -> bool:
        return self.phase in (Phase.COLD_STARTING, Phase.READY)


@dataclass(frozen=True)
class ColdStart:
    """Cold start C = deploy + register, plus one control-plane round trip."""

    deploy_s: float = 30.0
    register_s: float = 10.0
    interlayer_ms: float = 50.0

    def __post_init__(self):
        if min(self.deploy_s, self.register_s, self.interlayer_ms) < 0:
            raise ConfigError("cold start components must be non-negative")

    @property
    def total_s(self) -> float:
        return self.deploy_s + self.register_s + self.interlayer_ms / 1000.0


@dataclass(frozen=True)
class LatencyModel:
    K_ms: float = 20.0
    U_ms: float = 400.0
    timeout_ms: int = 60_000
    congestion_exponent: float = 5.0

    def __post_init__(self):
        if self.K_ms <= 0 or self.U_ms <= 0:
            raise ConfigError("K_ms and U_ms must be positive")
        if self.timeout_ms <= 0 or self.congestion_exponent < 1:
            raise ConfigError("timeout_ms must be positive and congestion_exponent >= 1")


@dataclass(frozen=True)
class CostModel:
    alpha: float = 1.0
    x: float = 0.5
    y: float = 0.5

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not (0 <= self.x <= 1 and 0 <= self.y <= 1 and math.isclose(self.x + self.y, 1.0)):
            raise ConfigError("objective weights must lie in [0, 1] and sum to 1")


@dataclass(frozen=True)
class ClusterConfig:
    nodes: tuple = DEFAULT_NODES
    node_shares: tuple = (0.32, 0.26, 0.22, 0.2)
    share_jitter: float = 0.1
    capacity_per_pod: float = 150.0
    cold_start: ColdStart = ColdStart()
    tick_seconds: int = TICK_SECONDS

    def __post_init__(self):
        nodes = tuple(n if isinstance(n, NodeSpec) else NodeSpec(**n) for n in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if isinstance(self.cold_start, dict):
            object.__setattr__(self, "cold_start", ColdStart(**self.cold_start))
        object.__setattr__(self, "node_shares", tuple(float(s) for s in self.node_shares))
        edge = [n for n in nodes if n.layer == "edge"]
        cloud = [n for n in nodes if n.layer == "cloud"]
        if not edge:
            raise ConfigError("the cluster needs at least one edge node")
        if cloud and max(n.cpu_cores for n in edge) >= min(n.cpu_cores for n in cloud):
            raise ConfigError("edge nodes must have fewer cores than cloud nodes")
        if len(self.node_shares) != len(edge):
            raise ConfigError("node_shares needs one entry per edge node")
        if min(self.node_shares) < 0 or sum(self.node_shares) <= 0:
            raise ConfigError("node_shares must be non-negative with a positive sum")
        if self.capacity_per_pod <= 0 or self.share_jitter < 0:
            raise ConfigError("capacity_per_pod must be positive and share_jitter non-negative")

    @property
    def edge_nodes(self) -> tuple:
        return tuple(n for n in self.nodes if n.layer == "edge")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nodes"] = [asdict(n) for n in self.nodes]
        d["node_shares"] = list(self.node_shares)
        return d


# -- pure evaluators ---------------------------------------------------------

def request_latency(ready_pods: float, cold_start_active: bool, model: LatencyModel,
                    load_factor: float, cold_start_ms: float = 0.0) -> float:
    """``C + K + load_factor * U / max(ready_pods, 1)``, capped at the timeout.

    ``C`` (``cold_start_ms``) is added only when the request waited on a
    pod that was still starting.
    """
    if ready_pods < 0:
        raise ValueError("ready_pods must be non-negative")
    latency = model.K_ms + load_factor * model.U_ms / max(ready_pods, 1.0)
    if cold_start_active:
        latency += cold_start_ms
    return min(latency, float(model.timeout_ms))


def cpu_utilization(requests: float, ready_pods: float, capacity_per_pod: float) -> float:
    """Percent of ready capacity used; saturates at 100 (excess queues)."""
    if capacity_per_pod <= 0:
        raise ValueError("capacity_per_pod must be positive")
    if requests <= 0:
        return 0.0
    if ready_pods <= 0:
        return 100.0
    return min(100.0, 100.0 * requests / (ready_pods * capacity_per_pod))


def tick_cost(pods: int, alpha: float) -> float:
    if pods < 0:
        raise ValueError("pod count must be non-negative")
    return alpha * pods


def objective(latency_norm, cost_norm, x: float = 0.5, y: float = 0.5):
    return x * latency_norm + y * cost_norm


def minmax(values) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant sequence maps to zeros."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return arr
    span = arr.max() - arr.min()
    return np.zeros_like(arr) if span == 0 else (arr - arr.min()) / span


def forward_demand(pods, demand) -> list[int]:
    """Move demand off pod-less nodes onto nodes with pods, by pod count."""
    pods = [int(p) for p in pods]
    demand = [int(d) for d in demand]
    if sum(pods) == 0:
        return demand
    stranded = sum(d for d, p in zip(demand, pods) if p == 0)
    extra = thpa_allocate(stranded, pods)
    return [(d if p > 0 else 0) + e for d, p, e in zip(demand, pods, extra)]


@dataclass(frozen=True)
class RouteResult:
    pods: list
    load: list


def route_requests(per_node_pods, per_node_demand, placement: str) -> RouteResult:
    """Place ``sum(per_node_pods)`` pods under a placement rule and route demand.

    ``round_robin`` spreads pods evenly regardless of demand;
    ``traffic_aware`` allocates them in proportion to demand.
    """
    total = int(sum(per_node_pods))
    demand = [int(d) for d in per_node_demand]
    if any(d < 0 for d in demand):
        raise ValueError("demand must be non-negative")
    if placement == "round_robin":
        pods = thpa_allocate(total, [0] * len(demand))
    elif placement == "traffic_aware":
        pods = thpa_allocate(total, demand)
    else:
        raise ConfigError(f"unknown placement {placement!r}")
    return RouteResult(pods, forward_demand(pods, demand))


def node_share_schedule(cfg: ClusterConfig, n_ticks: int, seed: int) -> np.ndarray:
    """Per-tick request shares across edge nodes, (n_ticks, n_edge).

    Base shares perturbed by mean-one lognormal jitter, renormalized.  The
    stream depends only on the seed, so every policy sees the same split.
    """
    base = np.asarray(cfg.node_shares, float)
    base = base / base.sum()
    rng = np.random.default_rng([seed, 0x5AFE])
    s = cfg.share_jitter
    noise = rng.lognormal(-0.5 * s * s, s, (n_ticks, len(base))) if s > 0 else np.ones((n_ticks, len(base)))
    shares = base * noise
    return shares / shares.sum(axis=1, keepdims=True)


# -- simulation state --------------------------------------------------------

@dataclass
class TickReport:
    tick: int
    requests: int
    ready_pods: int
    starting_pods: int
    cpu_pct: float
    latency_ms: float
    breach: int
    dropped: int
    cost: float
    served: int = 0
    queued: int = 0
    cold_delayed: int = 0
    expired: int = 0
    node_cpu_pct: tuple = ()

    CSV_FIELDS = ("tick", "requests", "ready_pods", "starting_pods", "cpu_pct",
                  "latency_ms", "breach", "dropped", "cost")

    def csv_row(self) -> list:
        return [self.tick, self.requests, self.ready_pods, self.starting_pods,
                f"{self.cpu_pct:.6f}", f"{self.latency_ms:.6f}", self.breach,
                self.dropped, f"{self.cost:.6f}"]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TickReport.CSV_FIELDS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


@dataclass
class Deployment:
    pods: list = field(default_factory=list)
    per_node_share: np.ndarray | None = None
    cpu_threshold: float = 60.0

    def live_pods(self) -> list:
        return [p for p in self.pods if p.live]


@dataclass
class ClusterState:
    cfg: ClusterConfig
    deployment: Deployment
    queue: list
    next_pod_id: int = 0
    rr_cursor: int = 0
    tick: int = -1


class ClusterSim:
    def __init__(self, cfg: ClusterConfig, latency: LatencyModel, cost: CostModel,
                 sla_threshold_ms: float, placement: str = "round_robin",
                 initial_replicas: int = 1, cpu_threshold: float = 60.0):
        if placement not in ("round_robin", "traffic_aware"):
            raise ConfigError(f"unknown placement {placement!r}")
        self.cfg = cfg
        self.latency = latency
        self.cost = cost
        self.sla_threshold_ms = float(sla_threshold_ms)
        self.placement = placement
        n_edge = len(cfg.edge_nodes)
        base = np.asarray(cfg.node_shares, float)
        self.state = ClusterState(cfg, Deployment(per_node_share=base / base.sum(),
                                                  cpu_threshold=cpu_threshold), [0] * n_edge)
        self._cold_ticks = math.ceil(cfg.cold_start.total_s / cfg.tick_seconds)
        # initial replicas are already warm
        for _ in range(initial_replicas):
            pod = self._spawn(0)
            pod.advance(Phase.READY)
            pod.ready_at_tick = 0

    # -- pod management ------------------------------------------------------
    @property
    def n_edge(self) -> int:
        return len(self.state.queue)

    def replica_count(self) -> int:
        return len(self.state.deployment.live_pods())

    def pods_per_node(self) -> list[int]:
        counts = [0] * self.n_edge
        for p in self.state.deployment.live_pods():
            counts[p.node] += 1
        return counts

    def _target(self, total: int) -> list[int]:
        return thpa_allocate(total, self.state.deployment.per_node_share)

    def _choose_node_up(self, counts) -> int:
        st = self.state
        if self.placement == "round_robin":
            node = st.rr_cursor % self.n_edge
            st.rr_cursor += 1
            return node
        target = self._target(sum(counts) + 1)
        return max(range(self.n_edge), key=lambda i: (target[i] - counts[i], -i))

    def _spawn(self, tick: int) -> Pod:
        st = self.state
        node = self._choose_node_up(self.pods_per_node())
        pod = Pod(st.next_pod_id, node, tick, tick + self._cold_ticks)
        st.next_pod_id += 1
        pod.advance(Phase.COLD_STARTING)
        st.deployment.pods.append(pod)
        return pod

    def _terminate_one(self) -> bool:
        dep = self.state.deployment
        ready = [p for p in dep.pods if p.phase is Phase.READY]
        if not ready:
            return False
        if self.placement == "traffic_aware":
            counts = self.pods_per_node()
            target = self._target(sum(counts) - 1)
            node = max(range(self.n_edge), key=lambda i: (counts[i] - target[i], -i))
            on_node = [p for p in ready if p.node == node]
            victim = max(on_node or ready, key=lambda p: p.id)
        else:
            victim = max(ready, key=lambda p: p.id)
        victim.advance(Phase.TERMINATING)
        dep.pods.remove(victim)
        return True

    def apply_decision(self, tick: int, desired: int) -> None:
        current = self.replica_count()
        for _ in range(desired - current):
            pod = self._spawn(tick)
            if pod.ready_at_tick <= tick:
                pod.advance(Phase.READY)
        for _ in range(current - desired):
            if not self._terminate_one():
                break

    def _advance_phases(self, tick: int) -> None:
        for p in self.state.deployment.pods:
            if p.phase is Phase.COLD_STARTING and p.ready_at_tick <= tick:
                p.advance(Phase.READY)

    # -- one tick --------------------------------------------------------------
    def _cold_fraction(self, pod: Pod, tick: int) -> float:
        """Share of this tick before ``pod`` can serve."""
        tick_s = self.cfg.tick_seconds
        warm_at = pod.created_tick * tick_s + self.cfg.cold_start.total_s
        return min(1.0, max(0.0, (warm_at - tick * tick_s) / tick_s))

    def step(self, tick: int, incoming_requests: int,
             decision: ScalingDecision | None = None, shares=None) -> TickReport:
        st = self.state
        if tick <= st.tick:
            raise ValueError(f"tick {tick} is not after {st.tick}")
        st.tick = tick
        self._advance_phases(tick)
        if decision is not None:
            self.apply_decision(tick, decision.desired_replicas)

        n = self.n_edge
        ready = [0] * n
        starting = [0] * n
        cold_frac = [0.0] * n
        for p in st.deployment.live_pods():
            if p.phase is Phase.READY:
                ready[p.node] += 1
            else:
                starting[p.node] += 1
                cold_frac[p.node] = max(cold_frac[p.node], self._cold_fraction(p, tick))
        live = [r + s for r, s in zip(ready, starting)]

        if shares is None:
            shares = st.deployment.per_node_share
        demand = forward_demand(live, thpa_allocate(int(incoming_requests), shares))
        total_d = sum(demand)
        if total_d > 0:
            # the traffic-aware placement works from the last observed split
            st.deployment.per_node_share = np.asarray(demand, float) / total_d

        outcomes = []
        for i in range(n):
            out = serve_node(demand[i], st.queue[i], ready[i], starting[i], cold_frac[i],
                             self.cfg, self.latency, self.sla_threshold_ms,
                             st.deployment.cpu_threshold / 100.0)
            st.queue[i] = out.queued
            outcomes.append(out)

        served = sum(o.served for o in outcomes)
        work = sum(o.work for o in outcomes)
        capacity = sum(o.capacity for o in outcomes)
        if incoming_requests == 0 and work == 0:
            latency_ms = self.latency.K_ms
        elif served > 0:
            latency_ms = sum(o.latency_sum for o in outcomes) / served
        else:
            latency_ms = float(self.latency.timeout_ms)
        cpu = 100.0 * work / capacity if capacity > 0 else (100.0 if incoming_requests else 0.0)
        n_ready, n_start = sum(ready), sum(starting)
        return TickReport(
            tick, int(incoming_requests), n_ready, n_start, min(cpu, 100.0), latency_ms,
            sum(o.breach for o in outcomes), sum(o.dropped for o in outcomes),
            tick_cost(n_ready + n_start, self.cost.alpha), served,
            sum(o.queued for o in outcomes), sum(o.cold_delayed for o in outcomes),
            sum(o.expired for o in outcomes), tuple(o.cpu_pct for o in outcomes))


@dataclass(frozen=True)
class NodeOutcome:
    served: int             # this tick's arrivals served this tick
    cold_delayed: int       # of those, how many waited for a starting pod
    queued: int
    dropped: int
    expired: int            # carried-over requests that timed out
    work: int               # requests processed, including carried-over ones
    capacity: int
    latency_sum: float
    breach: int

    @property
    def cpu_pct(self) -> float:
        if self.capacity <= 0:
            return 100.0 if self.work or self.queued or self.dropped else 0.0
        return 100.0 * self.work / self.capacity


def _phase_latency(work: int, capacity: int, pods: float, cap: float, lat: LatencyModel,
                   cold_ms: float = 0.0) -> float:
    if capacity <= 0:
        return float(lat.timeout_ms)
    u = work / capacity
    # per-pod load scaled so the U term is U * u**gamma
    load_factor = pods * u ** lat.congestion_exponent
    return request_latency(pods, cold_ms > 0, lat, load_factor, cold_ms)


def serve_node(demand: int, queue_in: int, ready: int, starting: int, cold_frac: float,
               cfg: ClusterConfig, lat: LatencyModel, threshold_ms: float,
               target_util: float = 1.0) -> NodeOutcome:
    """Serve one node's requests for one tick.

    For the first ``cold_frac`` of the tick the starting pods are cold.
    The share of that window's arrivals meant for pods the load needs (at
    ``target_util``) but which are not ready yet waits for them and pays
    the cold start on top of its service latency; the ready pods take the
    rest, and their overflow waits too.  Afterwards all pods serve.
    Requests still unserved at the end of the tick queue up to what the
    node can clear within the timeout; the rest are dropped.
    """
    cap = cfg.capacity_per_pod
    tick_ms = cfg.tick_seconds * 1000.0
    kappa = cold_frac if starting else 0.0
    d_cold = round(demand * kappa)
    d_warm = demand - d_cold
    cap_cold = math.floor(ready * cap * kappa)
    cap_warm = math.floor((ready + starting) * cap * (1.0 - kappa))

    missing = 0
    if kappa > 0 and target_util > 0:
        needed = math.ceil((demand + queue_in) / (cap * target_util) - 1e-9)
        missing = min(starting, max(0, needed - ready))
    held = round(d_cold * missing / (ready + missing)) if missing else 0

    # carried-over requests go first
    q_cold = min(queue_in, cap_cold)
    q_warm = min(queue_in - q_cold, cap_warm)
    expired = queue_in - q_cold - q_warm
    a_served = min(d_cold - held, cap_cold - q_cold)
    waiting = d_cold - a_served
    b_cold = min(waiting, cap_warm - q_warm)
    b_served = min(d_warm, cap_warm - q_warm - b_cold)
    unserved = waiting - b_cold + d_warm - b_served

    work_cold = q_cold + a_served
    work_warm = q_warm + b_cold + b_served
    lat_cold_phase = _phase_latency(work_cold, cap_cold, ready, cap, lat)
    lat_warm = _phase_latency(work_warm, cap_warm, ready + starting, cap, lat)
    lat_delayed = _phase_latency(work_warm, cap_warm, ready + starting, cap, lat,
                                 cfg.cold_start.total_s * 1000.0)

    q_limit = math.floor((ready + starting) * cap * lat.timeout_ms / tick_ms)
    queued = min(unserved, q_limit)
    breach = (a_served * (lat_cold_phase > threshold_ms) + b_served * (lat_warm > threshold_ms)
              + b_cold * (lat_delayed > threshold_ms) + unserved)
    return NodeOutcome(
        served=a_served + b_served + b_cold, cold_delayed=b_cold, queued=queued,
        dropped=unserved - queued, expired=expired, work=work_cold + work_warm,
        capacity=cap_cold + cap_warm,
        latency_sum=a_served * lat_cold_phase + b_served * lat_warm + b_cold * lat_delayed,
        breach=int(breach))


def step(sim: ClusterSim, tick: int, incoming_requests: int,
         decision: ScalingDecision | None = None, shares=None) -> TickReport:
    return sim.step(tick, incoming_requests, decision, shares)
