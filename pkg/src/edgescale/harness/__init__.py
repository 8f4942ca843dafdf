from .config import (DEFAULT_CONFIG, KINDS, TIERS, ScenarioConfig, SlaPolicy, load_config,
                     scenario_from_config, sla_policy)
from .report import (Comparison, CpuRow, PolicyRow, closest_to_ideal, compare_policies,
                     compare_reports, cpu_distribution_report, run_matrix, write_run_outputs,
                     write_summary)
from .runner import RunReport, run_scenario, seed_statistics, trace_digest

__all__ = [
    "DEFAULT_CONFIG", "KINDS", "TIERS", "ScenarioConfig", "SlaPolicy", "load_config",
    "scenario_from_config", "sla_policy", "RunReport", "run_scenario", "seed_statistics",
    "trace_digest", "Comparison", "CpuRow", "PolicyRow", "closest_to_ideal",
    "compare_policies", "compare_reports", "cpu_distribution_report", "run_matrix",
    "write_run_outputs", "write_summary",
]
