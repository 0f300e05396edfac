"""Per-agent belief maintenance and divergence detection.

The robot keeps one model per human: a belief base filled by perceptual
filtering (a fact is believed only when every entity it mentions was
visible to that human, or the human is its subject), task know-how, and
goal/plan/step awareness. Unobserved beliefs persist unchanged, which is
exactly what makes them diverge from the robot's own assessment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .situation import (
    CAN_SEE,
    Fact,
    FactBase,
    is_functional,
    is_observable,
)

KNOWN = "known"
UNKNOWN = "unknown"

STEP_STATUS = "stepStatus"  # meta-predicate for step progress beliefs

PENDING = "pending"
ACTIVE = "active"
DONE = "done"
FAILED = "failed"


@dataclass
class KnowledgeModel:
    """Per-(agent, task) know-how; defaults to known, monotone once learned."""

    unknown: set = field(default_factory=set)  # {(agent_id, task_label)}

    def knows_task(self, agent_id: str, task_label: str) -> str:
        return UNKNOWN if (agent_id, task_label) in self.unknown else KNOWN

    def learn(self, agent_id: str, task_label: str) -> None:
        self.unknown.discard((agent_id, task_label))


@dataclass
class BeliefBase:
    agent_id: str
    facts: dict = field(default_factory=dict)  # key -> Fact
    prop_names: frozenset = frozenset()

    def key_for(self, fact: Fact):
        if is_functional(fact.predicate, self.prop_names):
            return (fact.subject, fact.predicate)
        return (fact.subject, fact.predicate, fact.obj)

    def insert(self, fact: Fact) -> None:
        self.facts[self.key_for(fact)] = fact

    def all_facts(self) -> list:
        return sorted(self.facts.values(), key=lambda f: (f.subject, f.predicate, str(f.obj)))

    def value_of(self, subject: str, predicate: str):
        f = self.facts.get((subject, predicate))
        return None if f is None else f.obj

    def holds(self, subject: str, predicate: str, obj) -> bool:
        f = self.facts.get((subject, predicate))
        if f is not None and f.obj == obj:
            return True
        return (subject, predicate, obj) in self.facts

    def strings(self) -> list:
        return [str(f) for f in self.all_facts()]


@dataclass
class AgentMentalState:
    agent_id: str
    beliefs: BeliefBase
    goal_aware: bool = False
    plan_aware: Optional[str] = None
    plan_steps: tuple = ()
    step_beliefs: dict = field(default_factory=dict)  # step_id -> status

    def digest(self) -> dict:
        return {
            "agent": self.agent_id,
            "facts": self.beliefs.strings(),
            "goalAware": self.goal_aware,
            "planAware": self.plan_aware,
            "steps": dict(sorted(self.step_beliefs.items())),
        }


@dataclass(frozen=True)
class Divergence:
    agent_id: str
    believed: Optional[Fact]
    actual: Optional[Fact]
    relevant: bool

    @property
    def key(self) -> tuple:
        f = self.actual if self.actual is not None else self.believed
        return (f.subject, f.predicate)

    def to_wire(self) -> dict:
        return {
            "agent": self.agent_id,
            "believed": None if self.believed is None else str(self.believed),
            "actual": None if self.actual is None else str(self.actual),
            "relevant": self.relevant,
        }


class MentalStateStore:
    """Holds the robot's model of every other agent in one session."""

    def __init__(self, agent_ids: Iterable[str], entity_ids: Iterable[str],
                 prop_names: Iterable[str] = (),
                 knowledge: Optional[KnowledgeModel] = None):
        self.entity_ids = frozenset(entity_ids)
        self.prop_names = frozenset(prop_names)
        self.knowledge = knowledge if knowledge is not None else KnowledgeModel()
        self.states = {
            aid: AgentMentalState(aid, BeliefBase(aid, prop_names=self.prop_names))
            for aid in sorted(agent_ids)
        }

    def get(self, agent_id: str) -> AgentMentalState:
        return self.states[agent_id]

    def seed_belief(self, agent_id: str, fact: Fact) -> None:
        self.states[agent_id].beliefs.insert(fact)

    def _mentioned(self, fact: Fact) -> set:
        out = {fact.subject}
        if isinstance(fact.obj, str) and fact.obj in self.entity_ids:
            out.add(fact.obj)
        return out

    # -- perception --------------------------------------------------------

    def perceive_update(self, agent_id: str, robot_facts: FactBase,
                        events: Iterable = (), step_updates: Iterable = ()) -> AgentMentalState:
        """Filter this tick's assessment through what the agent could see.

        A fact enters the belief base iff every entity it mentions is
        visible to the agent this tick or the agent is its subject; a
        believed fact whose entities are all in view but which no longer
        holds is dropped (the agent observes its absence). `step_updates`
        carries (step_id, actor, status) transitions detected by the
        executive; they land only when the actor was visible.
        """
        mental = self.states[agent_id]
        visible = {agent_id} | robot_facts.objects_of(agent_id, CAN_SEE)

        def observed(fact: Fact) -> bool:
            if fact.subject == agent_id:
                return True
            return all(e in visible for e in self._mentioned(fact))

        current_triples = set()
        for f in robot_facts.facts:
            if not is_observable(f.predicate, self.prop_names):
                continue
            current_triples.add(f.triple)
            if observed(f):
                mental.beliefs.insert(f)

        for key, bf in list(mental.beliefs.facts.items()):
            if bf.triple in current_triples:
                continue
            if observed(bf):
                del mental.beliefs.facts[key]

        for step_id, actor, status in step_updates:
            if actor == agent_id or actor in visible:
                if mental.plan_aware is not None and step_id in mental.plan_steps:
                    mental.step_beliefs[step_id] = status
        return mental

    # -- communication -----------------------------------------------------

    def apply_comm(self, act) -> AgentMentalState:
        """Update the addressee's model after a communicative act.

        AcceptPlan is the one act applied to its *sender* (accepting makes
        the sender plan-aware); everything else updates the addressee.
        """
        from .comm import (
            ACCEPT_PLAN, EXPLAIN, INFORM, PROPOSE_PLAN, REQUEST_ACTION,
        )
        if act.kind == ACCEPT_PLAN:
            mental = self.states[act.sender]
            if act.plan_id != mental.plan_aware:
                raise ValueError(f"accept for unknown plan {act.plan_id}")
            return mental

        mental = self.states[act.addressee]
        if act.kind == INFORM:
            f = act.fact
            if f.predicate == STEP_STATUS:
                if mental.plan_aware is None or f.subject not in mental.plan_steps:
                    raise ValueError(f"inform about unknown step {f.subject}")
                mental.step_beliefs[f.subject] = f.obj
            else:
                mental.beliefs.insert(f)
        elif act.kind == EXPLAIN:
            self.knowledge.learn(act.addressee, act.task)
        elif act.kind == PROPOSE_PLAN:
            mental.goal_aware = True
            mental.plan_aware = act.plan_id
            mental.plan_steps = tuple(s["stepId"] for s in act.summaries.get("steps", []))
            mental.step_beliefs = {s: PENDING for s in mental.plan_steps}
        elif act.kind == REQUEST_ACTION:
            if mental.plan_aware is None or act.step_id not in mental.plan_steps:
                raise ValueError(f"request for unknown step {act.step_id}")
            mental.step_beliefs[act.step_id] = PENDING
        return mental

    # -- divergence --------------------------------------------------------

    def divergences(self, agent_id: str, robot_facts: FactBase, plan=None,
                    step_status: Optional[dict] = None) -> list:
        """Compare the agent's modeled beliefs to the robot's assessment.

        Only observable predicates participate. A divergence is relevant
        when its key appears in a precondition of a not-yet-done plan step
        assigned to this agent, or is step-status meta-information.
        """
        mental = self.states[agent_id]
        actual: dict = {}
        for f in robot_facts.facts:
            if is_observable(f.predicate, self.prop_names):
                actual[(f.subject, f.predicate)] = f

        believed: dict = {}
        for f in mental.beliefs.facts.values():
            if is_observable(f.predicate, self.prop_names):
                believed[(f.subject, f.predicate)] = f

        relevant_keys = set()
        if plan is not None:
            for s in plan.steps:
                status = (step_status or {}).get(s.step_id, PENDING)
                if s.agent == agent_id and status != DONE:
                    for (subj, pred, _obj) in s.preconds:
                        relevant_keys.add((subj, pred))

        out = []
        for key in sorted(set(actual) | set(believed)):
            bf, af = believed.get(key), actual.get(key)
            if bf is not None and af is not None and bf.obj == af.obj:
                continue
            out.append(Divergence(agent_id, bf, af, relevant=key in relevant_keys))

        if plan is not None and step_status is not None and mental.plan_aware == plan.plan_id:
            for s in plan.steps:
                actual_status = step_status.get(s.step_id, PENDING)
                believed_status = mental.step_beliefs.get(s.step_id, PENDING)
                # pending vs active is invisible progress, not a divergence
                coarse = lambda st: PENDING if st in (PENDING, ACTIVE) else st
                if coarse(believed_status) != coarse(actual_status):
                    out.append(Divergence(
                        agent_id,
                        Fact(s.step_id, STEP_STATUS, coarse(believed_status)),
                        Fact(s.step_id, STEP_STATUS, coarse(actual_status)),
                        relevant=True,
                    ))
        return out

    def knows_task(self, agent_id: str, task_label: str) -> str:
        return self.knowledge.knows_task(agent_id, task_label)

    def digests(self) -> dict:
        return {aid: self.states[aid].digest() for aid in sorted(self.states)}
