import random

import pytest

from coact.htn import (
    DepthBoundExceeded,
    HtnDomain,
    Infeasible,
    MethodDef,
    NegotiationConstraints,
    OK,
    OperatorDef,
    PlanNegotiation,
    SocialPolicy,
    SubtaskRef,
    TaskDef,
    VIOLATED,
    pattern_matches,
    plan,
    validate,
)
from coact.comm import CommAct
from coact.htn import PlanStep, SharedPlan
from coact.mental import KnowledgeModel
from coact.scenario import _parse_htn

import oracles
from fixtures import TABLE_LAMBDA, TABLE_MU, table_setting_domain, table_setting_facts

AGENTS = {"ROBOT": "robot", "BOB": "human"}


def domain():
    return _parse_htn(table_setting_domain())


def tfacts():
    return [tuple(f) for f in table_setting_facts()]


def mkplan(goal="set_table", args=(), knowledge=None, policy=None,
           constraints=None, facts=None, dom=None):
    return plan(dom or domain(), facts if facts is not None else tfacts(),
                goal, args, knowledge or KnowledgeModel(),
                policy or SocialPolicy(), constraints or NegotiationConstraints(),
                AGENTS)


# -- basics ---------------------------------------------------------------------


def test_goal_already_achieved_empty_plan():
    dom = domain()
    dom.tasks["set_table"] = TaskDef("set_table", (), achieved=(
        ("FORK", "isOn", "TABLE"), ("PLATE", "isOn", "TABLE")))
    p = mkplan(dom=dom, facts=[("FORK", "isOn", "TABLE"),
                               ("PLATE", "isOn", "TABLE")])
    assert p.steps == () and p.cost == 0.0


def test_plan_validates_against_initial_facts():
    p = mkplan()
    assert validate(p, tfacts()) == (OK, None)


def test_plan_cost_equals_bruteforce_minimum():
    p = mkplan()
    best, _ = oracles.min_cost_bruteforce(
        domain(), tfacts(), "set_table", (), AGENTS,
        KnowledgeModel(), SocialPolicy())
    assert abs(p.cost - best) < 1e-12


def table_policy(mode):
    return SocialPolicy(mode=mode, lam=TABLE_LAMBDA, mu=TABLE_MU)


def test_efficient_mode_keeps_unknown_tasks_off_the_human():
    knowledge = KnowledgeModel(unknown={("BOB", "carry_to_table")})
    p = mkplan(knowledge=knowledge, policy=table_policy("EFFICIENT"))
    human_unknown = [s for s in p.steps if s.agent == "BOB"]
    assert human_unknown == []
    best, _ = oracles.min_cost_bruteforce(
        domain(), tfacts(), "set_table", (), AGENTS,
        knowledge, table_policy("EFFICIENT"))
    assert abs(p.cost - best) < 1e-12


def test_teach_mode_assigns_unknown_tasks_to_the_human():
    knowledge = KnowledgeModel(unknown={("BOB", "carry_to_table")})
    p = mkplan(knowledge=knowledge, policy=table_policy("TEACH"))
    assert any(s.agent == "BOB" for s in p.steps)
    best, _ = oracles.min_cost_bruteforce(
        domain(), tfacts(), "set_table", (), AGENTS,
        knowledge, table_policy("TEACH"))
    assert abs(p.cost - best) < 1e-12


def test_mode_monotonicity_on_unknown_count():
    knowledge = KnowledgeModel(unknown={("BOB", "carry_to_table")})

    def unknown_count(p):
        return sum(1 for s in p.steps if s.agent == "BOB"
                   and ("BOB", s.op) in knowledge.unknown)

    teach = mkplan(knowledge=knowledge, policy=table_policy("TEACH"))
    efficient = mkplan(knowledge=knowledge, policy=table_policy("EFFICIENT"))
    assert unknown_count(teach) >= unknown_count(efficient)


def test_determinism_same_inputs_same_plan():
    p1, p2 = mkplan(), mkplan()
    assert p1.to_wire() == p2.to_wire()


def test_must_not_do_blocks_matching_assignment():
    c = NegotiationConstraints(must_not_do=frozenset({("BOB", "fetch(FORK)")}))
    p = mkplan(constraints=c)
    for s in p.steps:
        if s.agent == "BOB":
            assert not s.matches("fetch(FORK)")


def test_must_do_forces_assignment():
    c = NegotiationConstraints(must_do=frozenset({("BOB", "fetch(PLATE)")}))
    p = mkplan(constraints=c)
    assert any(s.agent == "BOB" and s.matches("fetch(PLATE)") for s in p.steps)


def test_infeasible_when_only_capable_agent_banned():
    dom = domain()
    # only the human can carry
    dom.operators["carry_to_table"] = OperatorDef(
        "carry_to_table", ("item",), ("human",),
        (("?item", "isIn", "STORAGE"),),
        (("?item", "isOn", "TABLE"),),
        (("?item", "isIn", "STORAGE"),),
        {"human": 1.0})
    c = NegotiationConstraints(must_not_do=frozenset({("BOB", "fetch(*)")}))
    with pytest.raises(Infeasible):
        mkplan(dom=dom, constraints=c)


def test_contradictory_constraints_report_both():
    with pytest.raises(Infeasible) as exc:
        NegotiationConstraints(
            must_do=frozenset({("BOB", "fetch(FORK)")}),
            must_not_do=frozenset({("BOB", "fetch(FORK)")}))
    assert ("BOB", "fetch(FORK)") in exc.value.violated_constraints


def test_depth_bound_reported_distinctly():
    dom = HtnDomain(
        tasks={"loop": TaskDef("loop", ())},
        methods={"loop": [MethodDef("loop", "again", (),
                                    (SubtaskRef("loop", ()),))]},
        operators={},
    )
    with pytest.raises(DepthBoundExceeded):
        plan(dom, [], "loop", (), KnowledgeModel(), SocialPolicy(),
             NegotiationConstraints(), AGENTS, depth_bound=10)


def test_pattern_matching():
    assert pattern_matches("fetch(MUG)", "fetch", ("MUG",))
    assert pattern_matches("fetch", "fetch", ("MUG",))
    assert pattern_matches("fetch(*)", "fetch", ("MUG",))
    assert pattern_matches("*", "anything", ())
    assert not pattern_matches("fetch(MUG)", "fetch", ("BOTTLE",))
    assert not pattern_matches("fetch(MUG)", "carry", ("MUG",))


# -- validate ----------------------------------------------------------------------


def test_validate_empty_plan_ok():
    empty = SharedPlan("p", (), frozenset(), (), 0.0)
    assert validate(empty, []) == (OK, None)


def test_validate_missing_precondition():
    s1 = PlanStep("s1", "carry", ("FORK",), "ROBOT",
                  (("FORK", "isIn", "STORAGE"),),
                  (("FORK", "isOn", "TABLE"),), (), 1.0, ())
    p = SharedPlan("p", (s1,), frozenset(), (), 1.0)
    status, detail = validate(p, [("FORK", "isIn", "CELLAR")])
    assert status == VIOLATED
    assert detail == ("s1", ("FORK", "isIn", "STORAGE"))


def test_validate_detects_unordered_threat():
    s1 = PlanStep("s1", "use", (), "ROBOT",
                  (("LIGHT", "is", "ON"),), (("WORK", "is", "DONE"),), (), 1.0, ())
    s2 = PlanStep("s2", "switch_off", (), "BOB",
                  (), (), (("LIGHT", "is", "ON"),), 1.0, ())
    p = SharedPlan("p", (s1, s2), frozenset(), (), 2.0)
    facts = [("LIGHT", "is", "ON")]
    assert validate(p, facts)[0] == VIOLATED
    assert oracles.validate_by_linearization(p, facts)[0] == VIOLATED
    # ordering the deleter after the consumer repairs it
    p2 = SharedPlan("p", (s1, s2), frozenset({("s1", "s2")}), (), 2.0)
    assert validate(p2, facts) == (OK, None)
    assert oracles.validate_by_linearization(p2, facts) == (OK, None)


@pytest.mark.parametrize("seed", range(8))
def test_validate_agrees_with_linearization_oracle_on_planner_output(seed):
    rng = random.Random(seed)
    knowledge = KnowledgeModel()
    if rng.random() < 0.5:
        knowledge.unknown.add(("BOB", "carry_to_table"))
    mode = rng.choice(("EFFICIENT", "TEACH", "BALANCED"))
    p = mkplan(knowledge=knowledge, policy=SocialPolicy(mode=mode))
    facts = tfacts()
    assert validate(p, facts) == oracles.validate_by_linearization(p, facts)
    # and against wrong facts both refuse
    assert validate(p, [])[0] == VIOLATED
    assert oracles.validate_by_linearization(p, [])[0] == VIOLATED


def test_validate_reports_first_violation_in_topological_order():
    s1 = PlanStep("s1", "a", (), "ROBOT", (("X", "is", "HERE"),), (), (), 1.0, ())
    s2 = PlanStep("s2", "b", (), "ROBOT", (("Y", "is", "HERE"),), (), (), 1.0, ())
    p = SharedPlan("p", (s1, s2), frozenset({("s1", "s2")}), (), 2.0)
    status, detail = validate(p, [])
    assert detail[0] == "s1"


# -- negotiation --------------------------------------------------------------------


def negotiation():
    return PlanNegotiation(domain(), tfacts(), "set_table", (),
                           KnowledgeModel(), SocialPolicy(), AGENTS)


def test_accept_returns_same_plan():
    neg = negotiation()
    p = neg.propose()
    result = neg.respond(CommAct.accept_plan("BOB", "ROBOT", p.plan_id))
    assert result.status == "accepted"
    assert result.plan is p


def test_reject_with_constraints_replans_compliantly():
    neg = negotiation()
    p = neg.propose()
    reject = CommAct.reject_plan("BOB", "ROBOT", p.plan_id,
                                 {"mustNotDo": [["BOB", "fetch(FORK)"]]})
    result = neg.respond(reject)
    assert result.status == "replanned"
    assert all(not (s.agent == "BOB" and s.matches("fetch(FORK)"))
               for s in result.plan.steps)
    # constraints persist across rounds in the same episode
    reject2 = CommAct.reject_plan("BOB", "ROBOT", result.plan.plan_id,
                                  {"mustNotDo": [["BOB", "fetch(PLATE)"]]})
    result2 = neg.respond(reject2)
    assert result2.status == "replanned"
    for s in result2.plan.steps:
        assert s.agent != "BOB"


def test_reject_contradiction_reports_infeasible():
    neg = negotiation()
    p = neg.propose()
    reject = CommAct.reject_plan("BOB", "ROBOT", p.plan_id,
                                 {"mustDo": [["BOB", "fetch(FORK)"]],
                                  "mustNotDo": [["BOB", "fetch(FORK)"]]})
    result = neg.respond(reject)
    assert result.status == "infeasible"
    assert ("BOB", "fetch(FORK)") in result.violated


def test_stale_plan_id_rejected():
    neg = negotiation()
    neg.propose()
    with pytest.raises(Exception):
        neg.respond(CommAct.accept_plan("BOB", "ROBOT", "plan-999"))


# -- randomized negotiation soundness ----------------------------------------------


def random_fetch_domain(rng):
    """table setting with a random number of items and costs."""
    n = rng.randint(2, 4)
    items = [f"ITEM{i}" for i in range(n)]
    dom_data = {
        "tasks": {"set_table": {"params": []}, "fetch": {"params": ["item"]}},
        "methods": [
            {"task": "set_table", "name": "all",
             "subtasks": [{"name": "fetch", "args": [it]} for it in items]},
            {"task": "fetch", "name": "carry",
             "subtasks": [{"name": "carry_to_table", "args": ["?item"],
                           "agent": "?any"}]},
        ],
        "operators": {
            "carry_to_table": {
                "params": ["item"],
                "agents": ["robot", "human"],
                "pre": [["?item", "isIn", "STORAGE"]],
                "add": [["?item", "isOn", "TABLE"]],
                "del": [["?item", "isIn", "STORAGE"]],
                "cost": {"robot": round(rng.uniform(0.5, 2.0), 2),
                         "human": round(rng.uniform(0.5, 2.0), 2)},
            },
        },
    }
    facts = [(it, "isIn", "STORAGE") for it in items]
    return _parse_htn(dom_data), facts, items


def test_negotiation_soundness_100_random_fixtures():
    rng = random.Random(1234)
    for trial in range(100):
        dom, facts, items = random_fetch_domain(rng)
        target = rng.choice(items)
        knowledge = KnowledgeModel()
        if rng.random() < 0.3:
            knowledge.unknown.add(("BOB", "carry_to_table"))
        policy = SocialPolicy(mode=rng.choice(("EFFICIENT", "TEACH", "BALANCED")))
        neg = PlanNegotiation(dom, facts, "set_table", (), knowledge, policy,
                              AGENTS)
        p = neg.propose()
        reject = CommAct.reject_plan(
            "BOB", "ROBOT", p.plan_id,
            {"mustNotDo": [["BOB", f"fetch({target})"]]})
        result = neg.respond(reject)
        assert result.status == "replanned", trial
        for s in result.plan.steps:
            assert not (s.agent == "BOB" and s.matches(f"fetch({target})")), trial
        assert validate(result.plan, facts) == (OK, None)
