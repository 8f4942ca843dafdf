import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgescale.autoscaler import (Gate, ScalingConfig, Source, cooldown_gate, desired_replicas,
                                  hybrid_schedule, raw_replicas, thpa_allocate, tolerance_gate,
                                  tolerance_ratio)
from edgescale.timeseries import ConfigError

# (current, metric_current, metric_desired, expected raw replicas), worked by hand
REPLICA_CASES = [
    (1, 60, 60, 1), (1, 61, 60, 2), (2, 90, 60, 3), (3, 70, 35, 6), (4, 30, 60, 2),
    (4, 31, 60, 3), (10, 45, 50, 9), (10, 100, 50, 20), (5, 0, 60, 0), (7, 59.9, 60, 7),
    (16, 90, 60, 24), (16, 37.5, 60, 10), (3, 0.7, 0.35, 6), (20, 55, 50, 22), (8, 12.5, 50, 2),
    (9, 100, 60, 15), (6, 61, 60, 7), (1, 100, 50, 2), (12, 25, 50, 6), (13, 25, 50, 7),
    (2, 150, 60, 5), (40, 60, 60, 40), (0, 80, 60, 0), (25, 48, 60, 20),
]


@pytest.mark.parametrize("cur,mc,md,expected", REPLICA_CASES)
def test_replica_rule_hand_values(cur, mc, md, expected):
    assert raw_replicas(cur, mc, md) == expected
    assert desired_replicas(cur, mc, md, min_replicas=1) == max(expected, 1)


def _exact_ceil(cur, mc, md):
    return math.ceil(Fraction(cur) * Fraction(str(mc)) / Fraction(str(md)))


@settings(max_examples=300, deadline=None)
@given(cur=st.integers(0, 60), mc=st.decimals(0, 200, places=2), md=st.decimals(1, 100, places=2))
def test_replica_rule_matches_exact_rational_oracle(cur, mc, md):
    assert raw_replicas(cur, float(mc), float(md)) == _exact_ceil(cur, mc, md)


def test_replica_bounds_and_errors():
    assert desired_replicas(30, 100, 50, 1, 40) == 40
    assert desired_replicas(2, 0, 60, 16, 40) == 16
    with pytest.raises(ConfigError):
        raw_replicas(1, 10, 0)


# (metric_current, metric_desired, threshold, expected ratio, gate)
TOLERANCE_CASES = [
    (60, 60, 0.1, 0.0, Gate.SKIP), (54, 60, 0.1, 0.1, Gate.PROCEED),
    (66, 60, 0.1, 0.1, Gate.PROCEED), (55, 60, 0.1, 1 / 12, Gate.SKIP),
    (65, 60, 0.1, 1 / 12, Gate.SKIP), (53, 60, 0.1, 7 / 60, Gate.PROCEED),
    (67, 60, 0.1, 7 / 60, Gate.PROCEED), (45, 50, 0.1, 0.1, Gate.PROCEED),
    (46, 50, 0.1, 0.08, Gate.SKIP), (55, 50, 0.1, 0.1, Gate.PROCEED),
    (54, 50, 0.1, 0.08, Gate.SKIP), (0, 60, 0.1, 1.0, Gate.PROCEED),
    (120, 60, 0.1, 1.0, Gate.PROCEED), (59.99, 60, 0.1, 0.01 / 60, Gate.SKIP),
    (50, 60, 0.2, 1 / 6, Gate.SKIP), (47, 60, 0.2, 13 / 60, Gate.PROCEED),
    (60, 60, 0.0, 0.0, Gate.PROCEED), (30, 50, 0.5, 0.4, Gate.SKIP),
    (100, 50, 0.5, 1.0, Gate.PROCEED), (24, 25, 0.1, 0.04, Gate.SKIP),
    (22, 25, 0.1, 0.12, Gate.PROCEED), (30, 30, 0.1, 0.0, Gate.SKIP),
]


@pytest.mark.parametrize("mc,md,thr,ratio,gate", TOLERANCE_CASES)
def test_tolerance_gate_hand_values(mc, md, thr, ratio, gate):
    assert tolerance_ratio(mc, md) == pytest.approx(ratio, abs=1e-9)
    assert tolerance_gate(mc, md, thr) is gate


# (current, mc, md, mf, max_replicas, expected replicas, expected source)
HYBRID_CASES = [
    (4, 60, 60, 90, None, 6, Source.FORECAST), (4, 90, 60, 60, None, 6, Source.REACTIVE),
    (4, 60, 60, 60, None, 4, Source.REACTIVE), (4, 60, 60, None, None, 4, Source.REACTIVE),
    (10, 30, 60, 45, None, 8, Source.FORECAST), (10, 45, 60, 30, None, 8, Source.REACTIVE),
    (1, 0, 60, 0, None, 1, Source.REACTIVE), (3, 70, 35, 80, None, 7, Source.FORECAST),
    (3, 80, 35, 70, None, 7, Source.REACTIVE), (16, 50, 60, 55, None, 15, Source.FORECAST),
    (16, 55, 60, 50, None, 15, Source.REACTIVE), (16, 61, 60, 62, None, 17, Source.REACTIVE),
    (2, 100, 50, 149, None, 6, Source.FORECAST), (2, 149, 50, 100, None, 6, Source.REACTIVE),
    (5, 12, 60, 13, None, 2, Source.FORECAST), (5, 13, 60, 12, None, 2, Source.REACTIVE),
    (8, 60, 60, 61, None, 9, Source.FORECAST), (8, 0, 60, 0, None, 1, Source.REACTIVE),
    (20, 30, 60, 90, None, 30, Source.FORECAST), (20, 30, 60, 90, 25, 25, Source.FORECAST),
    (20, 90, 60, 30, None, 30, Source.REACTIVE), (7, 40, 50, 40, None, 6, Source.REACTIVE),
    (7, 40, 50, 41, None, 6, Source.REACTIVE), (7, 40, 50, 43, None, 7, Source.FORECAST),
]


@pytest.mark.parametrize("cur,mc,md,mf,mx,replicas,source", HYBRID_CASES)
def test_hybrid_max_selection_hand_values(cur, mc, md, mf, mx, replicas, source):
    d = hybrid_schedule(cur, mc, md, mf, tick=3, min_replicas=1, max_replicas=mx)
    assert (d.desired_replicas, d.source, d.tick) == (replicas, source, 3)


@settings(max_examples=200, deadline=None)
@given(cur=st.integers(1, 40), mc=st.floats(0, 200), mf=st.floats(0, 200))
def test_hybrid_is_max_of_branches(cur, mc, mf):
    d = hybrid_schedule(cur, mc, 60.0, mf)
    r = desired_replicas(cur, mc, 60.0)
    f = desired_replicas(cur, mf, 60.0)
    assert d.desired_replicas == max(r, f)
    assert d.desired_replicas >= r


def test_cooldown_gate_in_ticks():
    cfg = ScalingConfig(scale_down_cooldown_s=300, scale_up_cooldown_s=15)
    assert cfg.cooldown_ticks("down") == 2
    assert cfg.cooldown_ticks("up") == 1
    assert cooldown_gate(None, None, 5, "down", cfg) is Gate.ALLOW
    assert cooldown_gate(None, 4, 5, "down", cfg) is Gate.BLOCK
    assert cooldown_gate(None, 3, 5, "down", cfg) is Gate.ALLOW
    assert cooldown_gate(4, None, 5, "up", cfg) is Gate.ALLOW
    with pytest.raises(ValueError):
        cooldown_gate(None, None, 0, "sideways", cfg)


def test_scaling_config_validation():
    with pytest.raises(ConfigError):
        ScalingConfig(min_replicas=0)
    with pytest.raises(ConfigError):
        ScalingConfig(min_replicas=5, max_replicas=4)
    with pytest.raises(ConfigError):
        ScalingConfig(metric_desired=0)
    assert ScalingConfig(min_replicas=2, max_replicas=5).clamp(9) == 5


@pytest.mark.parametrize("total,shares,expected", [
    (10, [0.4, 0.3, 0.2, 0.1], [4, 3, 2, 1]),
    (7, [0.4, 0.3, 0.2, 0.1], [3, 2, 1, 1]),      # quotas 2.8 2.1 1.4 .7 -> remainders .8 .7 .4 .1
    (5, [1, 1, 1, 1], [2, 1, 1, 1]),              # tie goes to the lower index
    (3, [0, 0, 0, 0], [1, 1, 1, 0]),
    (0, [0.5, 0.5], [0, 0]),
    (9, [0, 1, 0, 2], [0, 3, 0, 6]),
])
def test_thpa_allocate_examples(total, shares, expected):
    assert thpa_allocate(total, shares) == expected


@settings(max_examples=200, deadline=None)
@given(total=st.integers(0, 500),
       shares=st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=8))
def test_thpa_allocate_properties(total, shares):
    alloc = thpa_allocate(total, shares)
    assert sum(alloc) == total
    s = sum(shares)
    if s > 0:
        for a, w in zip(alloc, shares):
            q = total * w / s
            assert math.floor(q) <= a <= math.floor(q) + 1
