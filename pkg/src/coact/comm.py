"""Structured communicative acts and perspective-taking reference handling.

Acts are plain records rendered to tagged JSON on the wire; nothing here
mutates beliefs (that is mental-state's job). Reference resolution and
generation both evaluate against a *belief base*, never ground truth:
generation against the addressee's beliefs is what makes the produced
expressions understandable from their perspective.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .mental import BeliefBase
from .situation import Fact, IS_IN, IS_NEXT_TO, IS_ON, IS_LOOKING_AT, IS_POINTING_AT, value_str

INFORM = "inform"
ASK_FACT = "ask_fact"
ANSWER = "answer"
PROPOSE_PLAN = "propose_plan"
ACCEPT_PLAN = "accept_plan"
REJECT_PLAN = "reject_plan"
REQUEST_ACTION = "request_action"
EXPLAIN = "explain"
SIGNAL = "signal"

UNIQUE = "unique"
AMBIGUOUS = "ambiguous"
NONE = "none"

# generate_reference tries discriminating constraints in this order
PREFERENCE_ORDER = (IS_ON, IS_IN, IS_NEXT_TO)


@dataclass(frozen=True)
class CommAct:
    kind: str
    sender: str
    addressee: str
    tick: int = 0
    fact: Optional[Fact] = None
    pattern: Optional[tuple] = None
    facts: tuple = ()
    plan_id: Optional[str] = None
    summaries: dict = field(default_factory=dict)
    constraints: dict = field(default_factory=dict)
    step_id: Optional[str] = None
    step_payload: dict = field(default_factory=dict)
    task: Optional[str] = None
    signal: Optional[str] = None
    target: Optional[str] = None

    def __post_init__(self):
        if self.sender == self.addressee:
            raise ValueError("sender may not address itself")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def inform(sender, addressee, fact, tick=0):
        return CommAct(INFORM, sender, addressee, tick, fact=fact)

    @staticmethod
    def ask_fact(sender, addressee, pattern, tick=0):
        return CommAct(ASK_FACT, sender, addressee, tick, pattern=tuple(pattern))

    @staticmethod
    def answer(sender, addressee, facts, tick=0):
        return CommAct(ANSWER, sender, addressee, tick, facts=tuple(facts))

    @staticmethod
    def propose_plan(sender, addressee, plan_id, summaries, tick=0):
        return CommAct(PROPOSE_PLAN, sender, addressee, tick,
                       plan_id=plan_id, summaries=summaries)

    @staticmethod
    def accept_plan(sender, addressee, plan_id, tick=0):
        return CommAct(ACCEPT_PLAN, sender, addressee, tick, plan_id=plan_id)

    @staticmethod
    def reject_plan(sender, addressee, plan_id, constraints, tick=0):
        return CommAct(REJECT_PLAN, sender, addressee, tick,
                       plan_id=plan_id, constraints=constraints)

    @staticmethod
    def request_action(sender, addressee, step_id, step_payload=None, tick=0):
        return CommAct(REQUEST_ACTION, sender, addressee, tick,
                       step_id=step_id, step_payload=step_payload or {})

    @staticmethod
    def explain(sender, addressee, task, tick=0):
        return CommAct(EXPLAIN, sender, addressee, tick, task=task)

    @staticmethod
    def make_signal(sender, addressee, signal, target, tick=0):
        return CommAct(SIGNAL, sender, addressee, tick, signal=signal, target=target)

    # -- wire form ---------------------------------------------------------

    def to_wire(self) -> dict:
        payload: dict = {}
        if self.fact is not None:
            payload["fact"] = str(self.fact)
        if self.pattern is not None:
            payload["pattern"] = list(self.pattern)
        if self.facts:
            payload["facts"] = [str(f) for f in self.facts]
        if self.plan_id is not None:
            payload["planId"] = self.plan_id
        if self.summaries:
            payload["summaries"] = self.summaries
        if self.constraints:
            payload["constraints"] = self.constraints
        if self.step_id is not None:
            payload["stepId"] = self.step_id
        if self.step_payload:
            payload["step"] = self.step_payload
        if self.task is not None:
            payload["task"] = self.task
        if self.signal is not None:
            payload["signal"] = self.signal
            payload["target"] = self.target
        return {"kind": self.kind, "from": self.sender, "to": self.addressee,
                "tick": self.tick, "payload": payload}


def parse_fact_string(s: str, tick: int = 0) -> Fact:
    subject, predicate, obj = s.split(" ", 2)
    if obj == "TRUE":
        obj = True
    elif obj == "FALSE":
        obj = False
    return Fact(subject, predicate, obj, tick)


@dataclass(frozen=True)
class ReferringExpression:
    type_label: str
    constraints: tuple = ()  # ((predicate, value), ...)

    def to_wire(self) -> dict:
        return {"type": self.type_label,
                "constraints": [[p, value_str(v)] for p, v in self.constraints]}


def _believed_entities(beliefs: BeliefBase, catalog: dict) -> set:
    """Entities the addressee has any belief about."""
    out = set()
    for f in beliefs.facts.values():
        if f.subject in catalog:
            out.add(f.subject)
        if isinstance(f.obj, str) and f.obj in catalog:
            out.add(f.obj)
    return out


def _matches(beliefs: BeliefBase, entity: str, predicate: str, value) -> bool:
    return beliefs.holds(entity, predicate, value)


def resolve_reference(expr: ReferringExpression, beliefs: BeliefBase,
                      catalog: dict, known_predicates: Iterable[str]) -> tuple:
    """Ground a referring expression in the speaker's beliefs.

    `catalog` maps entity id -> type label (static common ground).
    Returns ("unique", id), ("ambiguous", frozenset) or ("none", None).
    """
    known = set(known_predicates)
    for predicate, _v in expr.constraints:
        if predicate not in known:
            raise ValueError(f"unknown predicate in constraint: {predicate}")
    candidates = sorted(
        e for e in _believed_entities(beliefs, catalog)
        if catalog.get(e) == expr.type_label
    )
    for predicate, value in expr.constraints:
        candidates = [c for c in candidates if _matches(beliefs, c, predicate, value)]
    if len(candidates) == 1:
        return (UNIQUE, candidates[0])
    if not candidates:
        return (NONE, None)
    return (AMBIGUOUS, frozenset(candidates))


def generate_reference(entity: str, addressee_beliefs: BeliefBase,
                       catalog: dict) -> Optional[ReferringExpression]:
    """Smallest discriminating expression in the addressee's beliefs.

    Greedy: start from the type label, then add one constraint per
    preference tier (isOn, isIn, isNextTo) whenever it shrinks the
    candidate set. Returns None when no discriminating set exists.
    """
    believed = _believed_entities(addressee_beliefs, catalog)
    if entity not in believed:
        raise KeyError(f"{entity} absent from addressee beliefs")
    type_label = catalog[entity]
    candidates = sorted(e for e in believed if catalog.get(e) == type_label)
    constraints: list = []

    for predicate in PREFERENCE_ORDER:
        if len(candidates) == 1:
            break
        values = sorted(
            {f.obj for f in addressee_beliefs.facts.values()
             if f.subject == entity and f.predicate == predicate},
            key=str,
        )
        for value in values:
            narrowed = [c for c in candidates
                        if _matches(addressee_beliefs, c, predicate, value)]
            if len(narrowed) < len(candidates):
                constraints.append((predicate, value))
                candidates = narrowed
                break

    if len(candidates) == 1 and candidates[0] == entity:
        return ReferringExpression(type_label, tuple(constraints))
    return None


def disambiguate_with_signal(candidates: Iterable[str], signals: Iterable[Fact]) -> tuple:
    """Narrow an ambiguous candidate set with the speaker's deictic signals.

    Pointing outranks gaze; an empty intersection keeps the original set.
    """
    current = frozenset(candidates)
    pointed = {f.obj for f in signals if f.predicate == IS_POINTING_AT}
    looked = {f.obj for f in signals if f.predicate == IS_LOOKING_AT}
    for targets in (pointed, looked):
        inter = current & targets
        if inter:
            current = frozenset(inter)
        if len(current) == 1:
            return (UNIQUE, next(iter(current)))
    return (AMBIGUOUS, current)
