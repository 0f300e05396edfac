import pytest
from hypothesis import given, settings, strategies as st

from coact.comm import (
    AMBIGUOUS,
    CommAct,
    NONE,
    ReferringExpression,
    UNIQUE,
    disambiguate_with_signal,
    generate_reference,
    parse_fact_string,
    resolve_reference,
)
from coact.mental import BeliefBase
from coact.situation import Fact, IS_IN, IS_LOOKING_AT, IS_NEXT_TO, IS_ON, IS_POINTING_AT

PREDICATES = (IS_ON, IS_IN, IS_NEXT_TO)


def beliefs_with(facts):
    base = BeliefBase("BOB")
    for f in facts:
        base.insert(Fact(*f))
    return base


CATALOG = {"MUG1": "mug", "MUG2": "mug", "BOTTLE": "bottle",
           "TABLE1": "table", "TABLE2": "table"}


def test_single_candidate_unique():
    beliefs = beliefs_with([("MUG1", IS_ON, "TABLE1"), ("TABLE1", IS_IN, "KITCHEN")])
    status, value = resolve_reference(ReferringExpression("mug"), beliefs,
                                      CATALOG, PREDICATES)
    assert (status, value) == (UNIQUE, "MUG1")


def test_constraint_separates_two_mugs():
    beliefs = beliefs_with([
        ("MUG1", IS_ON, "TABLE1"), ("MUG2", IS_ON, "TABLE2"),
        ("TABLE1", IS_IN, "KITCHEN"), ("TABLE2", IS_IN, "KITCHEN"),
    ])
    expr = ReferringExpression("mug", ((IS_ON, "TABLE1"),))
    status, value = resolve_reference(expr, beliefs, CATALOG, PREDICATES)
    assert (status, value) == (UNIQUE, "MUG1")


def test_unconstrained_two_mugs_ambiguous():
    beliefs = beliefs_with([("MUG1", IS_ON, "TABLE1"), ("MUG2", IS_ON, "TABLE2")])
    status, value = resolve_reference(ReferringExpression("mug"), beliefs,
                                      CATALOG, PREDICATES)
    assert status == AMBIGUOUS
    assert value == frozenset({"MUG1", "MUG2"})


def test_no_candidates_none():
    beliefs = beliefs_with([("BOTTLE", IS_ON, "TABLE1")])
    status, value = resolve_reference(ReferringExpression("mug"), beliefs,
                                      CATALOG, PREDICATES)
    assert (status, value) == (NONE, None)


def test_unknown_predicate_raises():
    beliefs = beliefs_with([("MUG1", IS_ON, "TABLE1")])
    expr = ReferringExpression("mug", (("isGlowing", True),))
    with pytest.raises(ValueError):
        resolve_reference(expr, beliefs, CATALOG, PREDICATES)


def test_generate_unique_type_needs_no_constraints():
    beliefs = beliefs_with([("MUG1", IS_ON, "TABLE1")])
    expr = generate_reference("MUG1", beliefs, CATALOG)
    assert expr.type_label == "mug" and expr.constraints == ()


def test_generate_two_mugs_adds_is_on():
    beliefs = beliefs_with([
        ("MUG1", IS_ON, "TABLE1"), ("MUG2", IS_ON, "TABLE2"),
    ])
    expr = generate_reference("MUG1", beliefs, CATALOG)
    assert expr.constraints == ((IS_ON, "TABLE1"),)
    status, value = resolve_reference(expr, beliefs, CATALOG, PREDICATES)
    assert (status, value) == (UNIQUE, "MUG1")


def test_generate_identical_twins_impossible():
    beliefs = beliefs_with([
        ("MUG1", IS_ON, "TABLE1"), ("MUG2", IS_ON, "TABLE1"),
        ("MUG1", IS_IN, "KITCHEN"), ("MUG2", IS_IN, "KITCHEN"),
    ])
    assert generate_reference("MUG1", beliefs, CATALOG) is None


def test_generate_requires_believed_entity():
    beliefs = beliefs_with([("MUG1", IS_ON, "TABLE1")])
    with pytest.raises(KeyError):
        generate_reference("MUG2", beliefs, CATALOG)


def test_signal_pointing_disambiguates():
    signals = [Fact("ANN", IS_POINTING_AT, "MUG2")]
    status, value = disambiguate_with_signal({"MUG1", "MUG2"}, signals)
    assert (status, value) == (UNIQUE, "MUG2")


def test_no_signal_still_ambiguous():
    status, value = disambiguate_with_signal({"MUG1", "MUG2"}, [])
    assert status == AMBIGUOUS and value == frozenset({"MUG1", "MUG2"})


def test_pointing_at_non_candidate_keeps_set():
    signals = [Fact("ANN", IS_POINTING_AT, "BOTTLE")]
    status, value = disambiguate_with_signal({"MUG1", "MUG2"}, signals)
    assert status == AMBIGUOUS and value == frozenset({"MUG1", "MUG2"})


def test_pointing_outranks_gaze():
    signals = [Fact("ANN", IS_LOOKING_AT, "MUG1"),
               Fact("ANN", IS_POINTING_AT, "MUG2")]
    status, value = disambiguate_with_signal({"MUG1", "MUG2"}, signals)
    assert (status, value) == (UNIQUE, "MUG2")


def test_monotone_in_constraints():
    beliefs = beliefs_with([
        ("MUG1", IS_ON, "TABLE1"), ("MUG2", IS_ON, "TABLE2"),
        ("MUG1", IS_IN, "KITCHEN"), ("MUG2", IS_IN, "KITCHEN"),
    ])
    def count(expr):
        status, value = resolve_reference(expr, beliefs, CATALOG, PREDICATES)
        if status == UNIQUE:
            return 1
        if status == NONE:
            return 0
        return len(value)
    base = ReferringExpression("mug")
    tightened = ReferringExpression("mug", ((IS_IN, "KITCHEN"),))
    more = ReferringExpression("mug", ((IS_IN, "KITCHEN"), (IS_ON, "TABLE1")))
    assert count(base) >= count(tightened) >= count(more)


@settings(max_examples=60, deadline=None)
@given(st.lists(
    st.tuples(st.sampled_from(["MUG1", "MUG2", "BOTTLE"]),
              st.sampled_from([IS_ON, IS_IN]),
              st.sampled_from(["TABLE1", "TABLE2", "KITCHEN", "LIVINGROOM"])),
    max_size=8))
def test_round_trip_when_discriminating_set_exists(fact_rows):
    beliefs = beliefs_with(fact_rows)
    for entity in ("MUG1", "MUG2", "BOTTLE"):
        try:
            expr = generate_reference(entity, beliefs, CATALOG)
        except KeyError:
            continue
        if expr is None:
            continue
        status, value = resolve_reference(expr, beliefs, CATALOG, PREDICATES)
        assert (status, value) == (UNIQUE, entity)


def test_comm_act_refuses_self_address():
    with pytest.raises(ValueError):
        CommAct.inform("BOB", "BOB", Fact("MUG", IS_IN, "KITCHEN"))


def test_wire_round_trip_fact_string():
    f = Fact("MUG", "isFull", True)
    assert str(f) == "MUG isFull TRUE"
    again = parse_fact_string(str(f))
    assert again.triple == f.triple


def test_ask_fact_and_answer_wire_forms():
    ask = CommAct.ask_fact("BOB", "ROBOT", ("MUG", IS_IN, "*"), tick=4)
    wire = ask.to_wire()
    assert wire["kind"] == "ask_fact"
    assert wire["payload"]["pattern"] == ["MUG", IS_IN, "*"]
    answer = CommAct.answer("ROBOT", "BOB", [Fact("MUG", IS_IN, "KITCHEN")], tick=5)
    wire = answer.to_wire()
    assert wire["payload"]["facts"] == ["MUG isIn KITCHEN"]
    assert wire["from"] == "ROBOT" and wire["to"] == "BOB"
