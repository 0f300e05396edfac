"""Shared-plan execution: dispatch, monitoring, repair, replanning.

Per tick, in order: mark step progress from the current assessment,
repair relevant divergent beliefs with Informs (one per agent per tick),
drive the protocol for the next human step (propose / explain / request /
wait), dispatch the earliest eligible robot step through the safety gate,
and fall back to replanning when the plan stops validating or a human
step times out. Handover steps run through the joint-action machine with
its engagement filter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import coordination, skills
from .comm import ACCEPT_PLAN, CommAct, REJECT_PLAN
from .coordination import (
    ALLOW,
    EngagementBelief,
    HANDOVER_ABORTED,
    HANDOVER_DONE,
    JointActionSession,
    engagement_observation,
    handover_step,
    safety_gate,
    update_engagement,
)
from .htn import (
    ACCEPTED,
    INFEASIBLE,
    Infeasible,
    NegotiationConstraints,
    PlanNegotiation,
    PlanningError,
    REPLANNED,
    SharedPlan,
    validate,
    OK,
)
from .mental import ACTIVE, DONE, FAILED, MentalStateStore, PENDING, UNKNOWN
from .situation import FactBase
from .world import Action, Event, WAIT, World, legal_actions

PROPOSING = "proposing"
EXECUTING = "executing"
REPLANNING = "replanning"
ACHIEVED = "achieved"
ABORTED = "aborted"

STILL_COMMITTED = "still-committed"
DISENGAGED_VERDICT = "disengaged"


@dataclass
class ExecConfig:
    wait_timeout: int = 20
    max_ignored_requests: int = 2
    proposal_timeout: int = 20
    engaged_threshold: float = coordination.ENGAGED_THRESHOLD
    disengaged_threshold: float = coordination.DISENGAGED_THRESHOLD
    disengaged_streak: int = coordination.DISENGAGED_STREAK


@dataclass
class ExecutionState:
    goal_id: str
    plan: Optional[SharedPlan] = None
    step_status: dict = field(default_factory=dict)
    wait_timers: dict = field(default_factory=dict)
    request_counts: dict = field(default_factory=dict)
    phase: str = PROPOSING
    phase_reason: Optional[str] = None

    def remaining_steps(self) -> list:
        if self.plan is None:
            return []
        return [s for s in self.plan.steps if self.step_status.get(s.step_id) != DONE]

    def all_done(self) -> bool:
        return self.plan is not None and all(
            self.step_status.get(s.step_id) == DONE for s in self.plan.steps)


@dataclass
class MonitorVerdict:
    robot_command: Optional[Action] = None
    comm_acts: list = field(default_factory=list)
    transitions: list = field(default_factory=list)  # (phase, reason) changes
    divergences: list = field(default_factory=list)
    step_updates: list = field(default_factory=list)  # (step_id, actor, status)
    engagement: Optional[dict] = None
    gate: str = ALLOW


class Executive:
    """Runs one goal episode for one robot against one (primary) human."""

    def __init__(self, robot_id: str, negotiation: PlanNegotiation,
                 store: MentalStateStore, agents: dict,
                 config: Optional[ExecConfig] = None):
        self.robot_id = robot_id
        self.negotiation = negotiation
        self.store = store
        self.agents = dict(agents)
        self.config = config or ExecConfig()
        self.state = ExecutionState(goal_id=negotiation.goal_task)
        self.humans = sorted(a for a, k in agents.items() if k == "human")
        self.primary_human = self.humans[0] if self.humans else None
        self.explained: set = set()
        self.requested: set = set()
        self.proposal_wait = 0
        self.session: Optional[JointActionSession] = None
        self.engagement: Optional[EngagementBelief] = None
        self.active_robot_step: Optional[str] = None
        self.robot_step_state: dict = {}
        self.robot_stall = 0
        self.last_events: list = []

    # -- lifecycle ----------------------------------------------------------

    def start(self, facts: FactBase, tick: int = 0) -> MonitorVerdict:
        """Plan the goal and either propose it or start executing."""
        verdict = MonitorVerdict()
        try:
            plan_obj = self.negotiation.propose(facts=[f.triple for f in facts.facts])
        except PlanningError as exc:
            self._move_phase(ABORTED, f"planning-failed: {exc}", verdict)
            return verdict
        self._install(plan_obj, tick, verdict)
        return verdict

    def _move_phase(self, phase: str, reason: Optional[str],
                    verdict: MonitorVerdict) -> None:
        self.state.phase = phase
        self.state.phase_reason = reason
        verdict.transitions.append((phase, reason))

    def _install(self, plan_obj: SharedPlan, tick: int, verdict: MonitorVerdict,
                 re_proposal_needed: Optional[bool] = None) -> None:
        self.state.plan = plan_obj
        self.state.step_status = {s.step_id: PENDING for s in plan_obj.steps}
        self.state.wait_timers = {}
        self.requested = set()
        self.explained = set()
        self.active_robot_step = None
        self.robot_step_state = {}
        self.robot_stall = 0
        self.session = None
        self.engagement = None

        human_steps = plan_obj.human_steps(self.agents)
        if re_proposal_needed is None:
            needs_proposal = bool(human_steps)
        else:
            needs_proposal = re_proposal_needed and bool(human_steps)
        if needs_proposal and self.primary_human is not None:
            self.proposal_wait = 0
            act = CommAct.propose_plan(self.robot_id, self.primary_human,
                                       plan_obj.plan_id, plan_obj.summaries(), tick)
            self.store.apply_comm(act)
            verdict.comm_acts.append(act)
            self._move_phase(PROPOSING, None, verdict)
        else:
            self._move_phase(EXECUTING, None, verdict)

    # -- helpers --------------------------------------------------------------

    def _human_steps_changed(self, old: Optional[SharedPlan],
                             new: SharedPlan) -> bool:
        def sig(p: Optional[SharedPlan], statuses: dict) -> tuple:
            if p is None:
                return ()
            return tuple(sorted(
                (s.agent, s.op, s.args) for s in p.steps
                if self.agents.get(s.agent) == "human"
                and statuses.get(s.step_id) != DONE))
        return sig(old, self.state.step_status) != sig(new, {})

    def _mark_progress(self, facts: FactBase) -> list:
        """Steps whose add-effects now hold (and deletes do not) are done."""
        updates = []
        plan_obj = self.state.plan
        if plan_obj is None:
            return updates
        triples = {f.triple for f in facts.facts}
        for s in plan_obj.steps:
            if self.state.step_status.get(s.step_id) in (DONE, FAILED):
                continue
            if not s.add and not s.delete:
                continue
            adds_ok = all(t in triples for t in s.add)
            dels_ok = all(t not in triples for t in s.delete)
            if adds_ok and dels_ok:
                self.state.step_status[s.step_id] = DONE
                self.state.wait_timers.pop(s.step_id, None)
                updates.append((s.step_id, s.agent, DONE))
                if s.step_id == self.active_robot_step:
                    self.active_robot_step = None
                    self.session = None
        return updates

    def _eligible(self, step) -> bool:
        status = self.state.step_status.get(step.step_id)
        if status in (DONE, FAILED):
            return False
        return all(self.state.step_status.get(p) == DONE
                   for p in self.state.plan.predecessors(step.step_id))

    def _preconds_hold(self, step, facts: FactBase) -> bool:
        triples = {f.triple for f in facts.facts}
        return all(t in triples for t in step.preconds)

    def commitment_check(self, agent_id: str) -> str:
        if self.state.request_counts.get(agent_id, 0) >= self.config.max_ignored_requests:
            return DISENGAGED_VERDICT
        return STILL_COMMITTED

    # -- replanning ------------------------------------------------------------

    def trigger_replan(self, reason: str, facts: FactBase, tick: int,
                       verdict: MonitorVerdict,
                       extra_constraints: Optional[NegotiationConstraints] = None) -> None:
        self._move_phase(REPLANNING, reason, verdict)
        if extra_constraints is not None:
            try:
                self.negotiation.constraints = \
                    self.negotiation.constraints.merged(extra_constraints)
            except Infeasible as exc:
                self._move_phase(ABORTED, f"constraints-contradictory: {exc}", verdict)
                return
        try:
            result = self.negotiation.propose(facts=[f.triple for f in facts.facts])
        except PlanningError as exc:
            self.handle_replan(None, tick, verdict, error=str(exc))
            return
        self.handle_replan(result, tick, verdict)

    def handle_replan(self, plan_obj: Optional[SharedPlan], tick: int,
                      verdict: MonitorVerdict, error: Optional[str] = None) -> None:
        """Install a replanning result; None aborts with the planner's report."""
        if plan_obj is None:
            self._move_phase(ABORTED, f"replanning-infeasible: {error}", verdict)
            return
        changed = self._human_steps_changed(self.state.plan, plan_obj)
        self._install(plan_obj, tick, verdict, re_proposal_needed=changed)

    # -- main tick ---------------------------------------------------------------

    def tick(self, world: World, prev_world: Optional[World], facts: FactBase,
             events: Iterable[Event], human_actions: dict,
             responses: Iterable[CommAct], tick: int) -> MonitorVerdict:
        verdict = MonitorVerdict()
        state = self.state
        self.last_events = list(events)

        if state.phase in (ACHIEVED, ABORTED):
            return verdict

        for act in responses:
            self._handle_response(act, tick, verdict)
            if state.phase in (ACHIEVED, ABORTED):
                return verdict

        if state.phase == PROPOSING:
            self.proposal_wait += 1
            if self.proposal_wait > self.config.proposal_timeout:
                if self.primary_human is not None:
                    state.request_counts[self.primary_human] = \
                        self.config.max_ignored_requests
                    self.trigger_replan(
                        "proposal-timeout", facts, tick, verdict,
                        NegotiationConstraints(must_not_do=frozenset(
                            {(self.primary_human, "*")})))
            if state.phase != EXECUTING:
                return verdict

        if state.phase != EXECUTING:
            return verdict

        # (1) progress from this tick's assessment
        verdict.step_updates.extend(self._mark_progress(facts))
        if state.all_done():
            self._move_phase(ACHIEVED, None, verdict)
            return verdict

        # (2) divergence repair: at most one Inform per agent per tick
        for agent_id in self.humans:
            divs = self.store.divergences(agent_id, facts, plan=state.plan,
                                          step_status=state.step_status)
            verdict.divergences.extend(divs)
            for div in divs:
                if div.relevant and div.actual is not None:
                    inform = CommAct.inform(self.robot_id, agent_id, div.actual, tick)
                    self.store.apply_comm(inform)
                    verdict.comm_acts.append(inform)
                    break

        # (3) protocol for the next human step
        self._drive_human_step(facts, events, tick, verdict)
        if state.phase != EXECUTING:
            return verdict

        # (4) robot dispatch through the safety gate
        self._drive_robot_step(world, prev_world, facts, human_actions, tick, verdict)
        if state.phase != EXECUTING:
            return verdict

        # (5) plan still valid?
        remaining = state.remaining_steps()
        if remaining:
            sub = _remaining_plan(state.plan, state.step_status)
            active = {s.step_id for s in remaining
                      if state.step_status.get(s.step_id) == ACTIVE}
            status, detail = validate(sub, [f.triple for f in facts.facts],
                                      skip_preconds=active)
            if status != OK:
                self.trigger_replan(f"invalid: {detail}", facts, tick, verdict)
        return verdict

    # -- internals ---------------------------------------------------------------

    def _handle_response(self, act: CommAct, tick: int,
                         verdict: MonitorVerdict) -> None:
        state = self.state
        if act.kind not in (ACCEPT_PLAN, REJECT_PLAN):
            return
        if state.plan is None or act.plan_id != state.plan.plan_id:
            return
        result = self.negotiation.respond(act)
        if result.status == ACCEPTED:
            self.store.apply_comm(act)
            self._move_phase(EXECUTING, "plan-accepted", verdict)
        elif result.status == REPLANNED:
            self._install(result.plan, tick, verdict)
        elif result.status == INFEASIBLE:
            self._move_phase(ABORTED,
                             f"negotiation-infeasible: {result.report}", verdict)

    def _next_human_step(self):
        for s in self.state.plan.steps:
            if self.agents.get(s.agent) != "human":
                continue
            if self.state.step_status.get(s.step_id) in (DONE, FAILED):
                continue
            if all(self.state.step_status.get(p) == DONE
                   for p in self.state.plan.predecessors(s.step_id)):
                return s
        return None

    def _drive_human_step(self, facts: FactBase, events: Iterable[Event],
                          tick: int, verdict: MonitorVerdict) -> None:
        state = self.state
        step = self._next_human_step()
        if step is None:
            return
        agent = step.agent
        mental = self.store.get(agent)

        if mental.plan_aware != state.plan.plan_id:
            # plan changed without a proposal round; bring the human up to date
            act = CommAct.propose_plan(self.robot_id, agent, state.plan.plan_id,
                                       state.plan.summaries(), tick)
            self.store.apply_comm(act)
            verdict.comm_acts.append(act)
            self.proposal_wait = 0
            self._move_phase(PROPOSING, "re-proposal", verdict)
            return

        if self.store.knows_task(agent, step.op) == UNKNOWN and \
                step.step_id not in self.explained:
            self.explained.add(step.step_id)
            act = CommAct.explain(self.robot_id, agent, step.op, tick)
            self.store.apply_comm(act)
            verdict.comm_acts.append(act)
            return

        if step.step_id not in self.requested:
            self.requested.add(step.step_id)
            state.step_status[step.step_id] = ACTIVE
            state.wait_timers[step.step_id] = 0
            act = CommAct.request_action(
                self.robot_id, agent, step.step_id,
                step_payload={"stepId": step.step_id, "op": step.op,
                              "args": list(step.args), "realize": step.realize},
                tick=tick)
            self.store.apply_comm(act)
            verdict.comm_acts.append(act)
            return

        acted = any(ev.actor == agent and ev.succeeded and ev.action.kind != WAIT
                    for ev in events)
        if acted:
            state.wait_timers[step.step_id] = 0
            return
        state.wait_timers[step.step_id] = state.wait_timers.get(step.step_id, 0) + 1
        if state.wait_timers[step.step_id] > self.config.wait_timeout:
            state.request_counts[agent] = state.request_counts.get(agent, 0) + 1
            if self.commitment_check(agent) == DISENGAGED_VERDICT:
                self.trigger_replan(
                    f"disengaged: {agent}", facts, tick, verdict,
                    NegotiationConstraints(must_not_do=frozenset({(agent, "*")})))
            else:
                self.trigger_replan(f"timeout: {step.step_id}", facts, tick, verdict)

    def _drive_robot_step(self, world: World, prev_world: Optional[World],
                          facts: FactBase, human_actions: dict, tick: int,
                          verdict: MonitorVerdict) -> None:
        state = self.state
        step = None
        if self.active_robot_step is not None:
            cand = state.plan.step(self.active_robot_step)
            if state.step_status.get(cand.step_id) == ACTIVE:
                step = cand
        if step is None:
            for s in state.plan.steps:
                if s.agent != self.robot_id or not self._eligible(s):
                    continue
                if self._preconds_hold(s, facts):
                    step = s
                    break
        if step is None:
            return

        if state.step_status.get(step.step_id) != ACTIVE:
            state.step_status[step.step_id] = ACTIVE
            self.active_robot_step = step.step_id
            self.robot_step_state = {}
            self.robot_stall = 0
            verdict.step_updates.append((step.step_id, self.robot_id, ACTIVE))

        if step.realize.get("kind") == "handover":
            self._drive_handover(step, world, prev_world, facts, tick, verdict)
            if state.phase != EXECUTING:
                return
        else:
            view = skills.WorldView(world, self.robot_id)
            action = skills.step_action(view, self.robot_id, step.realize,
                                        self.robot_step_state)
            if action is None or action not in legal_actions(world, self.robot_id):
                action = Action.wait()
            if action.kind == WAIT:
                self.robot_stall += 1
                if self.robot_stall > self.config.wait_timeout:
                    self.trigger_replan(f"stalled: {step.step_id}", facts, tick,
                                        verdict)
                    return
            else:
                self.robot_stall = 0
            verdict.robot_command = action

        gate = safety_gate(verdict.robot_command, world, human_actions,
                           self.last_events, self.robot_id)
        verdict.gate = gate
        if gate != ALLOW:
            verdict.robot_command = Action.wait()

    def _drive_handover(self, step, world: World, prev_world: Optional[World],
                        facts: FactBase, tick: int, verdict: MonitorVerdict) -> None:
        partner = step.realize.get("to")
        obj = step.realize.get("obj")
        if self.session is None or self.session.terminal:
            self.session = JointActionSession("handover", partner, obj)
            self.engagement = EngagementBelief.uniform()
        obs = engagement_observation(facts, prev_world, world, partner,
                                     self.robot_id, obj)
        self.engagement = update_engagement(self.engagement, obs)
        out = handover_step(self.session, self.engagement, world, self.robot_id,
                            engaged_threshold=self.config.engaged_threshold,
                            disengaged_threshold=self.config.disengaged_threshold,
                            streak_limit=self.config.disengaged_streak)
        verdict.engagement = {
            "belief": self.engagement.to_wire(),
            "observation": obs,
            "session": self.session.to_wire(),
        }
        if out.signal is not None:
            verdict.comm_acts.append(out.signal)
        if self.session.phase == HANDOVER_DONE:
            self.state.step_status[step.step_id] = DONE
            verdict.step_updates.append((step.step_id, self.robot_id, DONE))
            self.active_robot_step = None
            self.session = None
            verdict.robot_command = Action.wait()
        elif self.session.phase == HANDOVER_ABORTED:
            reason = self.session.abort_reason
            self.state.step_status[step.step_id] = FAILED
            verdict.step_updates.append((step.step_id, self.robot_id, FAILED))
            self.active_robot_step = None
            extra = None
            if reason == coordination.PARTNER_DISENGAGED:
                extra = NegotiationConstraints(must_not_do=frozenset({(partner, "*")}))
            self.trigger_replan(f"handover-aborted: {reason}", facts, tick,
                                verdict, extra)
        else:
            verdict.robot_command = out.action or Action.wait()


def _remaining_plan(plan_obj: SharedPlan, step_status: dict) -> SharedPlan:
    steps = tuple(s for s in plan_obj.steps if step_status.get(s.step_id) != DONE)
    ids = {s.step_id for s in steps}
    ordering = frozenset((a, b) for a, b in plan_obj.ordering if a in ids and b in ids)
    links = tuple(l for l in plan_obj.causal_links if l[1] in ids and
                  (l[0] == "init" or l[0] in ids))
    return SharedPlan(plan_obj.plan_id, steps, ordering, links, plan_obj.cost)
