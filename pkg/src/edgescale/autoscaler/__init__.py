from .controller import (PROFILES, Controller, DecisionRecord, PolicyProfile, ViolationLog,
                         controller_tick, decision_trace_csv, get_profile, violation_window_count)
from .scaling import (Gate, ScalingConfig, ScalingDecision, Source, cooldown_gate, desired_replicas,
                      hybrid_schedule, raw_replicas, thpa_allocate, tolerance_gate, tolerance_ratio)

__all__ = [
    "PROFILES", "Controller", "DecisionRecord", "PolicyProfile", "ViolationLog", "controller_tick",
    "decision_trace_csv", "get_profile", "violation_window_count", "Gate", "ScalingConfig",
    "ScalingDecision", "Source", "cooldown_gate", "desired_replicas", "hybrid_schedule",
    "raw_replicas", "thpa_allocate", "tolerance_gate", "tolerance_ratio",
]
