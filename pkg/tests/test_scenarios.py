"""Golden outcomes for the shipped scenario files (all deterministic)."""

import json

import pytest

from coact import runner

GOLDEN = {
    # path fragment: (achieved, ticks, replans, min informs)
    "trivial": (True, 1, 0, 0),
    "kitchen": (True, 14, 0, 2),
    "kitchen_crowded": (True, 10, 0, 1),
    "kitchen_reluctant": (True, 13, 0, 2),
    "kitchen_teach": (True, 24, 0, 3),
    "kitchen_lazy": (True, 56, 2, 2),
    "handover": (True, 6, 0, 0),
    "false_belief": (True, 8, 0, 0),
}


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_scenario_golden_outcome(name):
    achieved, ticks, replans, min_informs = GOLDEN[name]
    report, lines, _ = runner.run(f"/root/pkg/scenarios/{name}.json",
                                  max_ticks=250)
    assert report.goal_achieved == achieved
    assert report.ticks_elapsed == ticks
    assert report.replan_count == replans
    assert report.comm_act_count.get("inform", 0) >= min_informs


def test_walkaway_aborts_by_disengagement():
    report, lines, session = runner.run(
        "/root/pkg/scenarios/handover_walkaway.json", max_ticks=250)
    assert not report.goal_achieved
    assert report.replan_count == 1
    reasons = [r for rec in session.records for _, r in rec.transitions if r]
    assert any("PARTNER_DISENGAGED" in r for r in reasons)


def test_solo_infeasible_aborts():
    report, _, _ = runner.run(
        "/root/pkg/scenarios/kitchen_solo_infeasible.json", max_ticks=250)
    assert not report.goal_achieved
    assert "infeasible" in (report.abort_reason or "")


def test_lazy_kitchen_disengages_then_robot_finishes():
    report, _, session = runner.run("/root/pkg/scenarios/kitchen_lazy.json",
                                    max_ticks=250)
    assert report.goal_achieved
    reasons = [r for rec in session.records for _, r in rec.transitions if r]
    assert any(r.startswith("timeout") for r in reasons)
    assert any(r.startswith("disengaged") for r in reasons)


def test_teach_explains_before_requesting():
    report, lines, session = runner.run("/root/pkg/scenarios/kitchen_teach.json",
                                        max_ticks=250)
    assert report.goal_achieved
    acts = [(rec.tick, a["kind"]) for rec in session.records
            for a in rec.comm_acts]
    explains = [t for t, k in acts if k == "explain"]
    requests = [t for t, k in acts if k == "request_action"]
    assert explains and requests and explains[0] <= requests[0]


def test_false_belief_adopts_and_hands_over():
    report, _, session = runner.run("/root/pkg/scenarios/false_belief.json",
                                    max_ticks=250)
    assert report.goal_achieved
    posteriors = [r.posterior for r in session.records if r.posterior]
    assert posteriors[1]["fetch_mug"] > 0.8
    assert session.world.agents["BOB"].holding == "MUG"
