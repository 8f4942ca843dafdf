"""Cross-policy comparison, CPU targeting report and output files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..timeseries import ConfigError
from .config import KINDS, TIERS, scenario_from_config
from .runner import RunReport, run_scenario, seed_statistics


@dataclass
class PolicyRow:
    policy: str
    seeds: tuple
    violation_pct: tuple
    mean_pct: float
    std_pct: float
    mean_cpu_pct: float
    mean_cost: float


@dataclass
class Comparison:
    """Violation table per (tier, kind), rows ordered best first."""

    tables: dict = field(default_factory=dict)     # (tier, kind) -> [PolicyRow]
    digests: dict = field(default_factory=dict)    # seed -> trace digest
    reports: list = field(default_factory=list, repr=False)

    def ranking(self, tier: str, kind: str) -> list[str]:
        return [row.policy for row in self.tables[(tier, kind)]]

    def row(self, tier: str, kind: str, policy: str) -> PolicyRow:
        for r in self.tables[(tier, kind)]:
            if r.policy == policy:
                return r
        raise KeyError(policy)

    def per_seed_order_holds(self, tier: str, kind: str, order) -> list[bool]:
        """For each seed, whether violation % is strictly increasing along ``order``."""
        rows = {r.policy: r for r in self.tables[(tier, kind)]}
        seeds = rows[order[0]].seeds
        out = []
        for i in range(len(seeds)):
            vals = [rows[p].violation_pct[i] for p in order]
            out.append(all(a < b for a, b in zip(vals, vals[1:])))
        return out

    def to_text(self) -> str:
        lines = []
        for (tier, kind), rows in self.tables.items():
            lines.append(f"[{tier} {kind}]")
            lines.append(f"{'policy':8s} {'viol% mean':>10s} {'std':>6s} {'cpu%':>6s}  per-seed")
            for r in rows:
                per = " ".join(f"{v:.2f}" for v in r.violation_pct)
                lines.append(f"{r.policy:8s} {r.mean_pct:10.2f} {r.std_pct:6.2f} "
                             f"{r.mean_cpu_pct:6.1f}  {per}")
            lines.append("")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {f"{tier}-{kind}": [r.__dict__ for r in rows]
                for (tier, kind), rows in self.tables.items()}


def compare_reports(reports) -> Comparison:
    """Group finished runs into ranked tables.

    Every policy in a (tier, kind) group must have run the same seeds, and
    for each seed every run must have consumed the same request trace.
    """
    groups: dict = {}
    digests: dict = {}
    for rep in reports:
        groups.setdefault((rep.tier, rep.kind), {}).setdefault(rep.policy, []).append(rep)
        known = digests.setdefault(rep.seed, rep.trace_digest)
        if known != rep.trace_digest:
            raise ValueError(f"seed {rep.seed}: request traces differ between runs "
                             "(paired comparison violated)")
    comp = Comparison(digests=digests, reports=list(reports))
    for key, by_policy in groups.items():
        seed_sets = {p: tuple(sorted(r.seed for r in runs)) for p, runs in by_policy.items()}
        reference = next(iter(seed_sets.values()))
        if any(s != reference for s in seed_sets.values()):
            raise ConfigError(f"{key[0]} {key[1]}: policies ran different seeds {seed_sets}; "
                              "an unpaired comparison is not valid")
        rows = []
        for policy, runs in by_policy.items():
            runs = sorted(runs, key=lambda r: r.seed)
            pct = tuple(r.violation_pct for r in runs)
            mean, std = seed_statistics(pct)
            rows.append(PolicyRow(policy, reference, pct, mean, std,
                                  float(np.mean([r.mean_cpu_pct for r in runs])),
                                  float(np.mean([r.total_cost for r in runs]))))
        rows.sort(key=lambda r: (r.mean_pct, r.policy))
        comp.tables[key] = rows
    return comp


def run_matrix(cfg: dict, policies=None, tiers=None, kinds=None, seeds=None,
               cache: dict | None = None, progress=None) -> list[RunReport]:
    exp = cfg["experiment"]
    policies = list(policies or exp["policies"])
    tiers = list(tiers or exp["tiers"])
    kinds = list(kinds or exp["kinds"])
    seeds = list(seeds if seeds is not None else cfg["scenario"]["seeds"])
    for t in tiers:
        if t not in TIERS:
            raise ConfigError(f"unknown SLA tier {t!r} (experiment.tiers)")
    for k in kinds:
        if k not in KINDS:
            raise ConfigError(f"unknown request kind {k!r} (experiment.kinds)")
    cache = {} if cache is None else cache
    reports = []
    for tier in tiers:
        for kind in kinds:
            for policy in policies:
                sc = scenario_from_config(cfg, policy, tier, kind, seeds)
                for seed in seeds:
                    rep = run_scenario(sc, seed, cache)
                    reports.append(rep)
                    if progress is not None:
                        progress(rep)
    return reports


def compare_policies(cfg: dict, policies=None, tiers=None, kinds=None, seeds=None,
                     cache: dict | None = None, progress=None) -> Comparison:
    """Run every policy on the same seeds and rank them per tier and kind."""
    policies = list(policies or cfg["experiment"]["policies"])
    if not policies:
        raise ConfigError("experiment.policies must name at least one policy")
    return compare_reports(run_matrix(cfg, policies, tiers, kinds, seeds, cache, progress))


@dataclass
class CpuRow:
    policy: str
    mean_cpu_pct: float
    ideal_pct: float
    distance: float


def cpu_distribution_report(reports, cpu_target: float) -> list[CpuRow]:
    """Mean utilization per policy against the ideal point ``A/2``, closest first."""
    ideal = cpu_target / 2.0
    by_policy: dict = {}
    for rep in reports:
        by_policy.setdefault(rep.policy, []).append(rep.mean_cpu_pct)
    rows = []
    for policy, values in by_policy.items():
        mean = float(np.mean(values)) if values else 0.0
        rows.append(CpuRow(policy, mean, ideal, abs(mean - ideal)))
    rows.sort(key=lambda r: (r.distance, r.policy))
    return rows


def closest_to_ideal(rows) -> str | None:
    """The single closest policy, or None when the best distance is tied."""
    if not rows:
        return None
    if len(rows) > 1 and rows[0].distance == rows[1].distance:
        return None
    return rows[0].policy


# -- files -------------------------------------------------------------------

def write_run_outputs(rep: RunReport, out_dir) -> dict:
    """Per-tick, decision and figure CSVs for one run; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{rep.scenario}-seed{rep.seed}"
    paths = {"ticks": out / f"{stem}-ticks.csv", "decisions": out / f"{stem}-decisions.csv"}
    paths["ticks"].write_text(rep.tick_csv())
    paths["decisions"].write_text(rep.decision_csv())
    for name, text in rep.figure_csvs().items():
        paths[name] = out / f"{stem}-{name}.csv"
        paths[name].write_text(text)
    rep.csv_paths = {k: str(v) for k, v in paths.items()}
    return paths


def write_summary(out_dir, reports, comparison: Comparison | None = None,
                  cpu: dict | None = None) -> tuple[Path, Path]:
    """``summary.txt`` for people and ``summary.json`` for scripts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for rep in reports:
        lines.append(f"{rep.scenario} seed={rep.seed} window=[{rep.window_start},{rep.window_end}) "
                     f"requests={rep.total_requests} violations={rep.violations} "
                     f"({rep.violation_pct:.3f}%) latency={rep.mean_latency_ms:.1f}ms "
                     f"cpu={rep.mean_cpu_pct:.2f}% cost={rep.total_cost:.0f}")
    data = {"runs": [rep.summary() for rep in reports]}
    if comparison is not None:
        lines += ["", comparison.to_text()]
        data["comparison"] = comparison.to_dict()
    if cpu:
        lines.append("[cpu vs A/2]")
        data["cpu"] = {}
        for kind, rows in cpu.items():
            for r in rows:
                lines.append(f"{kind:4s} {r.policy:8s} mean={r.mean_cpu_pct:6.2f}% "
                             f"ideal={r.ideal_pct:.1f}% distance={r.distance:.2f}")
            data["cpu"][kind] = [r.__dict__ for r in rows]
    txt, js = out / "summary.txt", out / "summary.json"
    txt.write_text("\n".join(lines) + "\n")
    js.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return txt, js
