"""One simulation session: the per-tick pipeline tying everything together.

Each tick: humans decide in their believed worlds, the executive decides
the robot command (seeing pending human actions, so the safety gate can
yield), the kernel steps everyone simultaneously, situation assessment
refreshes the fact base, per-human models update by perceptual filtering,
communication is delivered, and the intention filter scores observed
human actions. Everything is deterministic given the scenario and seeds.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import situation
from .comm import ACCEPT_PLAN, CommAct, REJECT_PLAN
from .executive import ABORTED, ACHIEVED, ExecConfig, Executive, MonitorVerdict
from .htn import PlanNegotiation
from .humans import HumanDriver, INTERACTIVE
from .intention import (
    IntentionModel,
    IntentionPosterior,
    build_reach_mdp,
    decide_help,
    grid_action_label,
    initial_posterior,
    observe_action,
    value_iteration,
)
from .mental import MentalStateStore
from .scenario import GoalSpec, Scenario
from .situation import FactBase, IS_IN, assess, diff
from .world import World, step

RUNNING = "running"
TERMINAL_ACHIEVED = "achieved"
TERMINAL_ABORTED = "aborted"
TIMEOUT = "TIMEOUT"


@dataclass
class TraceRecord:
    tick: int
    events: list = field(default_factory=list)
    facts_added: list = field(default_factory=list)
    facts_removed: list = field(default_factory=list)
    comm_acts: list = field(default_factory=list)
    belief_digests: dict = field(default_factory=dict)
    posterior: Optional[dict] = None
    phase: Optional[str] = None
    phase_reason: Optional[str] = None
    transitions: list = field(default_factory=list)
    divergences: list = field(default_factory=list)
    engagement: Optional[dict] = None
    goal: Optional[str] = None

    def to_wire(self) -> dict:
        return {
            "tick": self.tick,
            "events": self.events,
            "factsAdded": sorted(self.facts_added),
            "factsRemoved": sorted(self.facts_removed),
            "commActs": self.comm_acts,
            "beliefs": self.belief_digests,
            "posterior": self.posterior,
            "phase": self.phase,
            "phaseReason": self.phase_reason,
            "transitions": [[p, r] for p, r in self.transitions],
            "divergences": self.divergences,
            "engagement": self.engagement,
            "goal": self.goal,
        }


class IntentionTracker:
    """Keeps a posterior over candidate goals for one observed human."""

    def __init__(self, config, world: World):
        self.config = config
        self.free_cells = [
            (x, y) for y in range(world.height) for x in range(world.width)
            if not world.blocking((x, y))
        ]
        self._mdp_cache: dict = {}
        self.posterior: Optional[IntentionPosterior] = None
        self.adopted: Optional[str] = None

    def _mdp(self, spec, spot) -> object:
        key = (spec.goal_id, tuple(spot))
        if key not in self._mdp_cache:
            mdp = build_reach_mdp(self.free_cells, tuple(spot), reach=spec.reach,
                                  step_cost=self.config.step_cost,
                                  discount=self.config.discount)
            value_iteration(mdp)
            self._mdp_cache[key] = mdp
        return self._mdp_cache[key]

    def observe(self, world: World, store: MentalStateStore, events) -> Optional[dict]:
        cfg = self.config
        if not cfg.goals:
            return None
        goal_mdps = []
        believed_states = {}
        for spec in cfg.goals:
            believed_room = store.get(spec.agent).beliefs.value_of(spec.target, IS_IN)
            spot = spec.spots.get(believed_room) if believed_room is not None else None
            if spot is None and spec.spots:
                # unmappable belief: keep a solved MDP for the vocabulary,
                # flag the goal by passing no state
                any_spot = sorted(spec.spots.values())[0]
                goal_mdps.append((spec.goal_id, self._mdp(spec, any_spot)))
                believed_states[spec.goal_id] = None
            elif spot is not None:
                goal_mdps.append((spec.goal_id, self._mdp(spec, spot)))
                believed_states[spec.goal_id] = world.agents[spec.agent].cell
            else:
                return None
        model = IntentionModel(goal_mdps, cfg.priors, beta=cfg.beta)
        if self.posterior is None:
            self.posterior = initial_posterior(model, cfg.context)
        observed = None
        for ev in events:
            if ev.actor == cfg.goals[0].agent and ev.succeeded:
                observed = grid_action_label(ev.action)
        if observed is not None:
            self.posterior = observe_action(model, self.posterior, observed,
                                            believed_states)
        return self.posterior.to_wire() if self.posterior is not None else None

    def adoption(self) -> Optional[str]:
        if self.posterior is None or self.adopted is not None:
            return None
        capability = {g.goal_id: g.feasible for g in self.config.goals}
        decision, goal = decide_help(self.posterior, capability,
                                     theta=self.config.theta)
        if decision == "adopt":
            self.adopted = goal
            return goal
        return None


class Session:
    def __init__(self, scenario: Scenario, exec_config: Optional[ExecConfig] = None):
        self.scenario = scenario
        self.world = scenario.world
        self.robot_id = scenario.robot_id
        self.exec_config = exec_config or ExecConfig()
        self.history: deque = deque(maxlen=situation.MOTION_WINDOW)
        self.prev_world: Optional[World] = None
        self.facts: FactBase = assess(self.world)
        self.records: list = []
        self.status = RUNNING
        self.abort_reason: Optional[str] = None

        kinds = scenario.agent_kinds()
        humans = sorted(a for a, k in kinds.items() if k == "human")
        self.store = MentalStateStore(
            humans, entity_ids=self.world.entity_ids(),
            prop_names=self.world.prop_domains.keys(),
            knowledge=scenario.knowledge,
        )
        self.drivers: dict = {}
        for aid in humans:
            cfg = scenario.humans[aid]
            self.drivers[aid] = HumanDriver(aid, cfg, self.world, self.robot_id)

        for aid, beliefs in scenario.initial_beliefs.items():
            for triple in beliefs:
                fact = situation.Fact(triple[0], triple[1], _parse_value(triple[2]), 0)
                self.store.seed_belief(aid, fact)
                if aid in self.drivers:
                    self.drivers[aid].believed.apply_inform(fact)
        for aid in humans:
            self.store.perceive_update(aid, self.facts)

        self.tracker = IntentionTracker(scenario.intentions, self.world) \
            if scenario.intentions else None

        self.goal_queue: list = list(scenario.goals)
        self.executive: Optional[Executive] = None
        self.current_goal: Optional[GoalSpec] = None
        self.last_events: list = []

        # tick-0 record: initial facts, initial plan/proposal
        record = TraceRecord(tick=self.world.tick)
        record.facts_added = [str(f) for f in self.facts]
        self._begin_next_goal(record)
        record.belief_digests = self.store.digests()
        self.records.append(record)

    # -- goal management -----------------------------------------------------

    def _begin_next_goal(self, record: TraceRecord) -> None:
        if not self.goal_queue or self.scenario.domain is None:
            return
        self.current_goal = self.goal_queue.pop(0)
        negotiation = PlanNegotiation(
            self.scenario.domain, [f.triple for f in self.facts.facts],
            self.current_goal.task, self.current_goal.args,
            self.scenario.knowledge, self.scenario.policy,
            self.scenario.agent_kinds(),
        )
        self.executive = Executive(self.robot_id, negotiation, self.store,
                                   self.scenario.agent_kinds(), self.exec_config)
        verdict = self.executive.start(self.facts, tick=self.world.tick)
        self._deliver(verdict.comm_acts)
        record.comm_acts.extend(a.to_wire() for a in verdict.comm_acts)
        record.transitions.extend(verdict.transitions)
        record.phase = self.executive.state.phase
        record.phase_reason = self.executive.state.phase_reason
        record.goal = self.current_goal.goal_id
        if self.executive.state.phase == ABORTED:
            self.status = TERMINAL_ABORTED
            self.abort_reason = self.executive.state.phase_reason

    def _deliver(self, acts: Iterable[CommAct]) -> None:
        for act in acts:
            driver = self.drivers.get(act.addressee)
            if driver is not None:
                driver.deliver(act)

    # -- the tick --------------------------------------------------------------

    def tick(self, injected_actions: Optional[dict] = None,
             injected_comms: Optional[Iterable[CommAct]] = None) -> TraceRecord:
        """Advance one tick. `injected_actions` feeds Interactive humans;
        `injected_comms` are client plan responses/answers."""
        if self.status != RUNNING:
            raise RuntimeError("session is terminal")

        for act in injected_comms or ():
            driver = self.drivers.get(act.sender)
            if driver is not None and driver.config.kind == INTERACTIVE:
                driver.inject_comm(act)
        if injected_actions:
            for aid, action in injected_actions.items():
                driver = self.drivers.get(aid)
                if driver is not None and driver.config.kind == INTERACTIVE:
                    driver.inject_action(action)

        # 1. humans decide in their believed worlds
        human_actions: dict = {}
        human_outbox: list = []
        for aid in sorted(self.drivers):
            action, outbox = self.drivers[aid].decide(self.world, self.world.tick)
            human_actions[aid] = action
            human_outbox.extend(outbox)

        # 2. executive decides the robot command
        responses = [a for a in human_outbox if a.kind in (ACCEPT_PLAN, REJECT_PLAN)]
        verdict = MonitorVerdict()
        if self.executive is not None:
            verdict = self.executive.tick(
                self.world, self.prev_world, self.facts,
                self.last_events, human_actions, responses, self.world.tick)

        actions = dict(human_actions)
        if verdict.robot_command is not None:
            actions[self.robot_id] = verdict.robot_command

        # 3. kernel step
        self.prev_world = self.world
        self.history.append(self.world)
        self.world, events = step(self.world, actions)
        self.last_events = events

        # 4. assessment
        new_facts = assess(self.world, list(self.history))
        added, removed = diff(self.facts, new_facts)
        self.facts = new_facts

        # 5. robot's models of the humans
        for aid in sorted(self.drivers):
            self.store.perceive_update(aid, self.facts, events,
                                       step_updates=verdict.step_updates)

        # 6. deliver communication
        self._deliver(verdict.comm_acts)
        self._deliver(a for a in human_outbox if a.kind not in (ACCEPT_PLAN, REJECT_PLAN))

        # 7. intention filter: actions are scored at the state they were
        # taken in, i.e. the pre-step world
        posterior = None
        if self.tracker is not None:
            posterior = self.tracker.observe(self.prev_world, self.store, events)
            adopted = self.tracker.adoption()
            if adopted is not None and self.executive is None:
                spec = next(g for g in self.tracker.config.goals
                            if g.goal_id == adopted)
                if spec.task is not None and self.scenario.domain is not None:
                    self.goal_queue.append(GoalSpec(
                        goal_id=f"adopted:{adopted}", task=spec.task,
                        args=(), tick_budget=300))

        record = TraceRecord(tick=self.world.tick)
        record.events = [e.to_wire() for e in events]
        record.facts_added = [str(f) for f in sorted(added, key=str)]
        record.facts_removed = [str(f) for f in sorted(removed, key=str)]
        record.comm_acts = [a.to_wire() for a in verdict.comm_acts] + \
            [a.to_wire() for a in human_outbox]
        record.posterior = posterior
        record.divergences = [d.to_wire() for d in verdict.divergences]
        record.engagement = verdict.engagement
        record.transitions = list(verdict.transitions)
        if self.executive is not None:
            record.phase = self.executive.state.phase
            record.phase_reason = self.executive.state.phase_reason
            record.goal = self.current_goal.goal_id if self.current_goal else None

        # 8. termination / next goal
        if self.executive is not None:
            phase = self.executive.state.phase
            if phase == ACHIEVED:
                if self.goal_queue:
                    self.executive = None
                    self.current_goal = None
                    self._begin_next_goal(record)
                else:
                    self.status = TERMINAL_ACHIEVED
            elif phase == ABORTED:
                self.status = TERMINAL_ABORTED
                self.abort_reason = self.executive.state.phase_reason
        elif self.goal_queue and self.scenario.domain is not None:
            self._begin_next_goal(record)

        record.belief_digests = self.store.digests()
        self.records.append(record)
        return record

    def run(self, max_ticks: int = 300) -> str:
        while self.status == RUNNING and self.world.tick < max_ticks:
            self.tick()
        if self.status == RUNNING:
            self.status = TERMINAL_ABORTED
            self.abort_reason = TIMEOUT
        return self.status


def _parse_value(v):
    if v == "TRUE":
        return True
    if v == "FALSE":
        return False
    return v
