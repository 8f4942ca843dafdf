import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgescale.autoscaler import ScalingDecision, Source
from edgescale.cluster_sim import (ClusterConfig, ClusterSim, ColdStart, CostModel, LatencyModel,
                                   NodeSpec, Phase, Pod, cpu_utilization, forward_demand, minmax,
                                   node_share_schedule, objective, reports_to_csv, request_latency,
                                   route_requests, serve_node, tick_cost)
from edgescale.timeseries import ConfigError

LAT = LatencyModel(K_ms=20.0, U_ms=400.0, timeout_ms=60_000, congestion_exponent=5.0)


@pytest.mark.parametrize("ready,cold,load,cold_ms,expected", [
    (1, False, 0.0, 0.0, 20.0),
    (1, False, 1.0, 0.0, 420.0),
    (4, False, 1.0, 0.0, 120.0),
    (4, False, 2.0, 0.0, 220.0),
    (0, False, 1.0, 0.0, 420.0),          # no ready pod counts as one
    (2, True, 1.0, 40_000.0, 40_220.0),
    (2, False, 1.0, 40_000.0, 220.0),     # cold start only when active
    (1, False, 1000.0, 0.0, 60_000.0),    # capped at the timeout
])
def test_request_latency(ready, cold, load, cold_ms, expected):
    assert request_latency(ready, cold, LAT, load, cold_ms) == pytest.approx(expected, abs=1e-9)


def test_cpu_utilization_and_cost():
    assert cpu_utilization(300, 2, 300) == 50.0
    assert cpu_utilization(0, 0, 300) == 0.0
    assert cpu_utilization(10, 0, 300) == 100.0
    assert cpu_utilization(10_000, 2, 300) == 100.0
    assert tick_cost(7, 2.0) == 14.0
    with pytest.raises(ValueError):
        tick_cost(-1, 1.0)
    assert objective(1.0, 0.0, 0.25, 0.75) == 0.25
    np.testing.assert_allclose(minmax([2, 4, 6]), [0, 0.5, 1])
    np.testing.assert_array_equal(minmax([3, 3]), [0, 0])


def test_cold_start_total():
    assert ColdStart(30, 10, 50).total_s == pytest.approx(40.05)
    with pytest.raises(ConfigError):
        ColdStart(-1, 0, 0)


def test_cluster_config_validation():
    with pytest.raises(ConfigError):
        ClusterConfig(node_shares=(0.5, 0.5))
    with pytest.raises(ConfigError):
        ClusterConfig(nodes=(NodeSpec("c", "cloud", 2, 4), NodeSpec("e", "edge", 4, 4)),
                      node_shares=(1.0,))
    with pytest.raises(ConfigError):
        NodeSpec("x", "fog", 1, 1)


def test_pod_lifecycle_is_one_way():
    pod = Pod(0, 0, 0, 1)
    pod.advance(Phase.COLD_STARTING)
    with pytest.raises(RuntimeError):
        pod.advance(Phase.PENDING)
    pod.advance(Phase.READY)
    pod.advance(Phase.TERMINATING)
    with pytest.raises(RuntimeError):
        pod.advance(Phase.READY)


def test_forward_demand_and_routing():
    assert forward_demand([0, 2, 1, 0], [10, 10, 10, 10]) == [0, 23, 17, 0]   # quotas 13.33, 6.67
    assert forward_demand([0, 0], [3, 4]) == [3, 4]
    rr = route_requests([4, 0, 0, 0], [40, 30, 20, 10], "round_robin")
    assert rr.pods == [1, 1, 1, 1]
    ta = route_requests([4, 0, 0, 0], [40, 30, 20, 10], "traffic_aware")
    assert ta.pods == [2, 1, 1, 0]
    assert ta.load == [45, 33, 22, 0]     # stranded 10 split 5 / 2.5 / 2.5, tie to node 1
    with pytest.raises(ConfigError):
        route_requests([1], [1], "random")


def test_share_schedule_is_normalized_and_seeded():
    cfg = ClusterConfig()
    a = node_share_schedule(cfg, 50, 1)
    np.testing.assert_allclose(a.sum(axis=1), 1.0)
    assert a.tobytes() == node_share_schedule(cfg, 50, 1).tobytes()
    assert a.tobytes() != node_share_schedule(cfg, 50, 2).tobytes()
    flat = node_share_schedule(ClusterConfig(share_jitter=0.0), 3, 0)
    np.testing.assert_allclose(flat[0], np.array(cfg.node_shares) / sum(cfg.node_shares))


# -- one node, one tick ------------------------------------------------------

CFG = ClusterConfig(capacity_per_pod=150.0, cold_start=ColdStart(40, 0, 0))


def test_serve_node_light_load_is_fast():
    out = serve_node(30, 0, 2, 0, 0.0, CFG, LAT, 100.0)
    assert out.served == 30 and out.breach == 0 and out.queued == out.dropped == 0
    u = 30 / 300
    assert out.latency_sum / out.served == pytest.approx(20 + 400 * u ** 5)


def test_serve_node_overload_queues():
    out = serve_node(1000, 0, 2, 0, 0.0, CFG, LAT, 100.0)
    assert out.served == 300
    assert out.queued + out.dropped == 700
    assert out.breach >= 700
    assert out.cpu_pct == 100.0


def test_serve_node_cold_start_delays_requests():
    # one needed pod still starting for the whole tick: its share waits
    out = serve_node(290, 0, 1, 1, 0.25, CFG, LAT, 800.0, target_util=1.0)
    assert out.cold_delayed > 0
    assert out.breach >= out.cold_delayed      # 40 s of cold start exceeds 800 ms
    # no starting pods -> no cold delay
    warm = serve_node(290, 0, 2, 0, 0.0, CFG, LAT, 800.0)
    assert warm.cold_delayed == 0


def test_serve_node_zero_pods_drops_everything():
    out = serve_node(50, 0, 0, 0, 0.0, CFG, LAT, 100.0)
    assert out.served == 0 and out.dropped == 50 and out.breach == 50


@settings(max_examples=300, deadline=None)
@given(demand=st.integers(0, 3000), queue=st.integers(0, 3000), ready=st.integers(0, 8),
       starting=st.integers(0, 4), frac=st.floats(0, 1), thr=st.sampled_from([100.0, 800.0]))
def test_serve_node_conservation(demand, queue, ready, starting, frac, thr):
    out = serve_node(demand, queue, ready, starting, frac, CFG, LAT, thr, 0.6)
    assert out.served + out.queued + out.dropped == demand
    assert out.work - (out.served) + out.expired == queue
    assert out.work <= out.capacity
    assert out.queued + out.dropped <= out.breach <= demand
    assert min(out.served, out.queued, out.dropped, out.expired, out.cold_delayed) >= 0
    if out.served:
        mean = out.latency_sum / out.served
        assert LAT.K_ms <= mean <= LAT.timeout_ms


# -- the whole cluster ---------------------------------------------------------

def make_sim(placement="round_robin", replicas=4, cold=ColdStart(40, 0, 0)):
    cfg = ClusterConfig(capacity_per_pod=150.0, cold_start=cold, share_jitter=0.0)
    return ClusterSim(cfg, LAT, CostModel(), 100.0, placement, replicas, 50.0)


def test_initial_pods_are_ready():
    sim = make_sim()
    rep = sim.step(0, 100)
    assert (rep.ready_pods, rep.starting_pods) == (4, 0)
    assert sim.pods_per_node() == [1, 1, 1, 1]
    assert rep.cost == 4.0


def test_scale_up_goes_through_cold_start():
    sim = make_sim(cold=ColdStart(200, 0, 0))          # two ticks of 160 s
    rep = sim.step(0, 100, ScalingDecision(6, Source.REACTIVE))
    assert (rep.ready_pods, rep.starting_pods) == (4, 2)
    rep = sim.step(1, 100)
    assert (rep.ready_pods, rep.starting_pods) == (4, 2)
    rep = sim.step(2, 100)
    assert (rep.ready_pods, rep.starting_pods) == (6, 0)


def test_zero_cold_start_is_immediately_ready():
    sim = make_sim(cold=ColdStart(0, 0, 0))
    rep = sim.step(0, 100, ScalingDecision(6, Source.REACTIVE))
    assert (rep.ready_pods, rep.starting_pods) == (6, 0)


def test_scale_down_and_traffic_aware_placement():
    sim = make_sim("traffic_aware", replicas=8)
    sim.step(0, 1000, ScalingDecision(8, Source.REACTIVE), [0.7, 0.1, 0.1, 0.1])
    sim.step(1, 1000, ScalingDecision(10, Source.REACTIVE), [0.7, 0.1, 0.1, 0.1])
    counts = sim.pods_per_node()
    assert sum(counts) == 10 and counts[0] == max(counts)
    sim.step(2, 1000, ScalingDecision(3, Source.REACTIVE), [0.7, 0.1, 0.1, 0.1])
    assert sim.replica_count() == 3


def test_ticks_must_increase():
    sim = make_sim()
    sim.step(0, 1)
    with pytest.raises(ValueError):
        sim.step(0, 1)


def test_idle_tick_reports_base_latency():
    rep = make_sim().step(0, 0)
    assert rep.latency_ms == LAT.K_ms and rep.cpu_pct == 0.0 and rep.breach == 0


def test_simulation_is_deterministic():
    def run():
        sim = make_sim("traffic_aware")
        rng = np.random.default_rng(0)
        shares = node_share_schedule(ClusterConfig(), 50, 0)
        reps = []
        for t in range(50):
            want = int(rng.integers(1, 12))
            reps.append(sim.step(t, int(rng.integers(0, 2000)), ScalingDecision(want, Source.REACTIVE),
                                 shares[t]))
        return reports_to_csv(reps)
    a, b = run(), run()
    assert a == b
    assert a.splitlines()[0] == "tick,requests,ready_pods,starting_pods,cpu_pct,latency_ms,breach,dropped,cost"


def test_breach_is_monotone_in_load():
    prev = -1
    for load in (100, 400, 800, 1200, 2000, 4000):
        rep = make_sim().step(0, load)
        assert rep.breach >= prev
        prev = rep.breach
    assert math.isclose(make_sim().step(0, 4000).cpu_pct, 100.0)
