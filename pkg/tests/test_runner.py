import json
import subprocess
import sys

import pytest

from coact import runner
from coact.scenario import load_scenario, load_scenario_file
from coact.session import Session

from fixtures import kitchen_doc, trivial_doc


def run_doc(doc, **kwargs):
    sc = load_scenario(json.dumps(doc))
    return runner.run_scenario(sc, **kwargs)


def test_trivial_report_values():
    report, lines, _ = run_doc(trivial_doc())
    wire = report.to_wire()
    assert wire["goalAchieved"] is True
    assert wire["ticksElapsed"] == 1
    assert wire["commActCount"] == {}
    assert wire["replanCount"] == 0
    assert wire["abortReason"] is None


def test_kitchen_cooperative_golden_run():
    report, lines, _ = run_doc(kitchen_doc("Cooperative"))
    assert report.goal_achieved and report.replan_count == 0
    assert report.comm_act_count.get("inform", 0) >= 1


def test_kitchen_distracted_matches_cooperative_outcome():
    from coact.situation import assess

    def object_facts(session):
        world = session.world
        agents = set(world.agents)
        return sorted(
            str(f) for f in assess(world)
            if f.subject not in agents
            and not (isinstance(f.obj, str) and f.obj in agents))

    rep_c, _, s_c = run_doc(kitchen_doc("Cooperative"))
    rep_d, _, s_d = run_doc(kitchen_doc("Distracted"))
    assert rep_c.goal_achieved and rep_d.goal_achieved
    assert rep_d.comm_act_count.get("inform", 0) >= 1
    assert object_facts(s_c) == object_facts(s_d)


def test_replay_verifies_untouched_trace():
    _, lines, _ = run_doc(kitchen_doc("Distracted"))
    assert runner.replay(lines) == (runner.VERIFIED, None)


def test_replay_detects_mutated_fact():
    _, lines, _ = run_doc(kitchen_doc("Cooperative"))
    target = None
    for i, line in enumerate(lines[1:], start=1):
        rec = json.loads(line)
        if rec.get("factsAdded"):
            rec["factsAdded"][0] = rec["factsAdded"][0] + "X"
            target = (i, rec["tick"])
            lines[i] = runner.canonical(rec)
            break
    status, detail = runner.replay(lines)
    assert status == runner.MISMATCH
    assert detail[0] == target[1]
    assert detail[1] == "factsAdded"


def test_replay_different_seed_mismatches():
    _, lines_a, _ = run_doc(kitchen_doc("Distracted", seed=42))
    _, lines_b, _ = run_doc(kitchen_doc("Distracted", seed=43))
    # splice seed-43 records under the seed-42 header
    spliced = [lines_a[0]] + lines_b[1:]
    status, detail = runner.replay(spliced)
    assert status == runner.MISMATCH


def test_replay_rejects_version_mismatch():
    _, lines, _ = run_doc(trivial_doc())
    header = json.loads(lines[0])
    header["version"] = "other-0"
    lines[0] = runner.canonical(header)
    with pytest.raises(ValueError):
        runner.replay(lines)


def test_report_recomputable_from_trace():
    report, lines, session = run_doc(kitchen_doc("Distracted"))
    records = [json.loads(l) for l in lines[1:]]
    header = json.loads(lines[0])
    again = runner.report_from_records(records, header["status"],
                                       header["abortReason"], ["BOB"])
    assert again.to_wire() == report.to_wire()


def test_divergences_resolved_bounded_by_detected():
    for doc in (kitchen_doc("Cooperative"), kitchen_doc("Distracted")):
        report, _, _ = run_doc(doc)
        assert 0 <= report.divergences_resolved <= report.divergences_detected


def test_run_is_deterministic_byte_for_byte():
    _, lines_a, _ = run_doc(kitchen_doc("Distracted", seed=42))
    _, lines_b, _ = run_doc(kitchen_doc("Distracted", seed=42))
    assert lines_a == lines_b


def test_timeout_reported():
    doc = kitchen_doc("Cooperative")
    doc["goals"][0]["tickBudget"] = 3
    report, _, _ = run_doc(doc)
    assert report.abort_reason == runner.TIMEOUT
    assert not report.goal_achieved


def test_cli_run_and_replay(tmp_path):
    trace = tmp_path / "out.ndjson"
    report_path = tmp_path / "report.json"
    proc = subprocess.run(
        [sys.executable, "-m", "coact.cli", "run", "scenarios/kitchen.json",
         "--human", "Distracted", "--trace", str(trace),
         "--report", str(report_path)],
        capture_output=True, text=True, cwd="/root/pkg")
    assert proc.returncode == 0, proc.stderr
    report = json.loads(report_path.read_text())
    assert report["goalAchieved"] is True
    proc2 = subprocess.run(
        [sys.executable, "-m", "coact.cli", "replay", str(trace)],
        capture_output=True, text=True, cwd="/root/pkg")
    assert proc2.returncode == 0, proc2.stdout + proc2.stderr
    assert "verified" in proc2.stdout


def test_cli_policy_mode_override():
    proc = subprocess.run(
        [sys.executable, "-m", "coact.cli", "run", "scenarios/kitchen_teach.json",
         "--policy-mode", "efficient"],
        capture_output=True, text=True, cwd="/root/pkg")
    assert proc.returncode == 0, proc.stderr


def test_trace_records_strictly_increasing_ticks():
    for doc in (kitchen_doc("Distracted"), trivial_doc()):
        _, lines, _ = run_doc(doc)
        ticks = [json.loads(l)["tick"] for l in lines[1:]]
        assert ticks == sorted(set(ticks))


def test_headless_refuses_interactive_human():
    scenario = load_scenario_file("/root/pkg/scenarios/kitchen_interactive.json")
    with pytest.raises(ValueError, match="Interactive"):
        runner.run_scenario(scenario)


def test_all_shipped_scenarios_replay(tmp_path):
    import glob
    for path in sorted(glob.glob("/root/pkg/scenarios/*.json")):
        if "interactive" in path:
            continue
        scenario = load_scenario_file(path)
        _, lines, _ = runner.run_scenario(scenario, max_ticks=250)
        assert runner.replay(lines) == (runner.VERIFIED, None), path
