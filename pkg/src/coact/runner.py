"""Headless scenario runner: metrics, NDJSON traces, deterministic replay.

A trace is a header line (version, scenario hash, embedded document,
seed) followed by one canonically-serialized record per tick. Replay
re-simulates from the embedded document and compares lines byte for
byte. The run report is always recomputed from the records, so report
and trace cannot disagree.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .executive import ExecConfig
from .scenario import Scenario, apply_overrides, load_scenario
from .session import Session, TERMINAL_ACHIEVED, TIMEOUT
from .world import WAIT

TRACE_VERSION = "coact-trace-1"

VERIFIED = "verified"
MISMATCH = "mismatch"


@dataclass
class RunReport:
    goal_achieved: bool = False
    ticks_elapsed: int = 0
    comm_act_count: dict = field(default_factory=dict)
    replan_count: int = 0
    divergences_detected: int = 0
    divergences_resolved: int = 0
    human_idle_ticks: int = 0
    abort_reason: Optional[str] = None

    def to_wire(self) -> dict:
        return {
            "goalAchieved": self.goal_achieved,
            "ticksElapsed": self.ticks_elapsed,
            "commActCount": dict(sorted(self.comm_act_count.items())),
            "replanCount": self.replan_count,
            "divergencesDetected": self.divergences_detected,
            "divergencesResolved": self.divergences_resolved,
            "humanIdleTicks": self.human_idle_ticks,
            "abortReason": self.abort_reason,
        }


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def scenario_hash(raw: dict) -> str:
    return hashlib.sha256(canonical(raw).encode("utf-8")).hexdigest()[:16]


def trace_lines(session: Session, raw_scenario: dict, seed: int,
                status: str, abort_reason: Optional[str]) -> list:
    header = {
        "version": TRACE_VERSION,
        "scenarioHash": scenario_hash(raw_scenario),
        "scenario": raw_scenario,
        "seed": seed,
        "status": status,
        "abortReason": abort_reason,
    }
    lines = [canonical(header)]
    lines.extend(canonical(r.to_wire()) for r in session.records)
    return lines


def report_from_records(records: Iterable[dict], status: str,
                        abort_reason: Optional[str], human_ids: Iterable[str]) -> RunReport:
    """Recompute the run report purely from serialized trace records."""
    humans = set(human_ids)
    report = RunReport()
    report.goal_achieved = status == TERMINAL_ACHIEVED
    report.abort_reason = abort_reason
    seen_keys: set = set()
    final_keys: set = set()
    last_tick = 0
    for rec in records:
        last_tick = max(last_tick, rec.get("tick", 0))
        for act in rec.get("commActs", []):
            kind = act.get("kind", "?")
            report.comm_act_count[kind] = report.comm_act_count.get(kind, 0) + 1
        for phase, _reason in rec.get("transitions", []):
            if phase == "replanning":
                report.replan_count += 1
        tick_keys = set()
        for div in rec.get("divergences", []):
            fact = div.get("actual") or div.get("believed") or ""
            parts = fact.split(" ", 2)
            key = (div.get("agent"), parts[0], parts[1] if len(parts) > 1 else "")
            tick_keys.add(key)
        seen_keys |= tick_keys
        final_keys = tick_keys
        for ev in rec.get("events", []):
            if ev.get("actor") in humans and ev.get("action", {}).get("kind") == WAIT:
                report.human_idle_ticks += 1
    report.ticks_elapsed = last_tick
    report.divergences_detected = len(seen_keys)
    report.divergences_resolved = len(seen_keys - final_keys)
    return report


def run_scenario(scenario: Scenario, max_ticks: int = 300,
                 exec_config: Optional[ExecConfig] = None,
                 allow_interactive: bool = False) -> tuple:
    """Run to termination; returns (RunReport, trace lines, Session).

    Interactive humans need a connected driver, so headless runs refuse
    them unless the caller (the session gateway) says otherwise."""
    if not allow_interactive:
        for aid, cfg in scenario.humans.items():
            if cfg.kind == "Interactive":
                raise ValueError(
                    f"human {aid} is Interactive and has no driver attached; "
                    f"serve this scenario instead")
    session = Session(scenario, exec_config=exec_config)
    budget = max_ticks
    if scenario.goals:
        budget = min(max_ticks, max(g.tick_budget for g in scenario.goals))
    status = session.run(budget)
    lines = trace_lines(session, scenario.raw, scenario.seed, status,
                        session.abort_reason)
    humans = [a for a, k in scenario.agent_kinds().items() if k == "human"]
    records = [json.loads(l) for l in lines[1:]]
    report = report_from_records(records, status, session.abort_reason, humans)
    return report, lines, session


def run(scenario_path: str, seed: Optional[int] = None,
        human_kind: Optional[str] = None, policy_mode: Optional[str] = None,
        max_ticks: int = 300) -> tuple:
    """CLI entry: load, apply overrides, run. Returns (report, lines, session)."""
    with open(scenario_path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    raw = apply_overrides(raw, seed=seed, human_kind=human_kind,
                          policy_mode=policy_mode)
    scenario = load_scenario(json.dumps(raw),
                             name=str(scenario_path).rsplit("/", 1)[-1])
    return run_scenario(scenario, max_ticks=max_ticks)


def replay(lines: list) -> tuple:
    """Re-simulate an existing trace; ("verified", None) or
    ("mismatch", (tick, field)). The header must match this version."""
    if not lines:
        return (MISMATCH, (0, "empty-trace"))
    header = json.loads(lines[0])
    if header.get("version") != TRACE_VERSION:
        raise ValueError(f"trace version {header.get('version')} != {TRACE_VERSION}")
    raw = header["scenario"]
    scenario = load_scenario(json.dumps(raw), name="replay")
    _report, new_lines, _session = run_scenario(scenario)
    for i, (old, new) in enumerate(zip(lines, new_lines)):
        if old != new:
            old_rec, new_rec = json.loads(old), json.loads(new)
            tick = old_rec.get("tick", i)
            for key in sorted(set(old_rec) | set(new_rec)):
                if old_rec.get(key) != new_rec.get(key):
                    return (MISMATCH, (tick, key))
            return (MISMATCH, (tick, "line"))
    if len(lines) != len(new_lines):
        return (MISMATCH, (len(new_lines), "length"))
    return (VERIFIED, None)


def replay_file(trace_path: str) -> tuple:
    with open(trace_path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    return replay(lines)


def write_trace(lines: list, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report(report: RunReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_wire(), fh, indent=2, sort_keys=True)
        fh.write("\n")
