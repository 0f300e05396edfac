"""Action-level joint coordination.

Engagement is a three-state Bayes filter over coarse observations of the
partner (gaze, approach, idling, leaving). The handover machine drives
approach, the proactive arm extension once the partner is adjacent and
engaged enough, the transfer, and abort on sustained disengagement. The
safety gate holds robot manipulations out of a workspace while a human is
working in it; navigation and gaze are never gated.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .comm import CommAct
from .situation import FactBase, IS_LOOKING_AT, IS_MOVING_TOWARD
from .world import (
    Action,
    Event,
    GIVE,
    LOOK_AT,
    MANIPULATION_KINDS,
    POINT_AT,
    World,
    chebyshev,
)
from . import skills

ENGAGED = "engaged"
DISTRACTED = "distracted"
DISENGAGED = "disengaged"
ENGAGEMENT_STATES = (ENGAGED, DISTRACTED, DISENGAGED)

OBS_LOOKING = "lookingAtPartnerOrObject"
OBS_MOVING_TOWARD = "movingTowardPartner"
OBS_IDLE = "idle"
OBS_MOVING_AWAY = "movingAway"
OBSERVATIONS = (OBS_LOOKING, OBS_MOVING_TOWARD, OBS_IDLE, OBS_MOVING_AWAY)

ALLOW = "allow"
HOLD = "hold"

APPROACH = "approach"
EXTEND = "extend"
TRANSFER = "transfer"
HANDOVER_DONE = "done"
HANDOVER_ABORTED = "aborted"

ENGAGED_THRESHOLD = 0.6
DISENGAGED_THRESHOLD = 0.7
DISENGAGED_STREAK = 5
SIGNAL_CADENCE = 5

OBJECT_LOST = "OBJECT_LOST"
PARTNER_DISENGAGED = "PARTNER_DISENGAGED"


def default_transition() -> dict:
    return {s: {s2: (0.8 if s2 == s else 0.1) for s2 in ENGAGEMENT_STATES}
            for s in ENGAGEMENT_STATES}


def default_likelihood() -> dict:
    def spread(main: dict) -> dict:
        rest = (1.0 - sum(main.values())) / (len(OBSERVATIONS) - len(main))
        return {o: main.get(o, rest) for o in OBSERVATIONS}
    return {
        ENGAGED: spread({OBS_LOOKING: 0.6, OBS_MOVING_TOWARD: 0.3}),
        DISTRACTED: spread({OBS_IDLE: 0.6}),
        DISENGAGED: spread({OBS_MOVING_AWAY: 0.6}),
    }


@dataclass(frozen=True)
class EngagementBelief:
    probs: dict
    transition: dict = field(default_factory=default_transition)
    likelihood: dict = field(default_factory=default_likelihood)

    def __post_init__(self):
        total = sum(self.probs.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"belief sums to {total}")
        for s, row in self.likelihood.items():
            if any(p <= 0 for p in row.values()):
                raise ValueError(f"non-positive likelihood in row {s}")

    @staticmethod
    def uniform(transition=None, likelihood=None) -> "EngagementBelief":
        n = len(ENGAGEMENT_STATES)
        return EngagementBelief(
            {s: 1.0 / n for s in ENGAGEMENT_STATES},
            transition or default_transition(),
            likelihood or default_likelihood(),
        )

    def p(self, state: str) -> float:
        return self.probs[state]

    def argmax(self) -> str:
        return min(ENGAGEMENT_STATES, key=lambda s: (-self.probs[s], s))

    def to_wire(self) -> dict:
        return {s: self.probs[s] for s in ENGAGEMENT_STATES}


def update_engagement(belief: EngagementBelief, observation: str) -> EngagementBelief:
    """Predict with the stickiness matrix, weight by the likelihood row,
    renormalize."""
    if observation not in OBSERVATIONS:
        raise ValueError(f"unknown observation {observation}")
    predicted = {
        s2: sum(belief.probs[s] * belief.transition[s][s2] for s in ENGAGEMENT_STATES)
        for s2 in ENGAGEMENT_STATES
    }
    weighted = {s: predicted[s] * belief.likelihood[s][observation]
                for s in ENGAGEMENT_STATES}
    z = sum(weighted.values())
    return replace(belief, probs={s: w / z for s, w in weighted.items()})


def engagement_observation(facts: FactBase, prev_world: Optional[World], world: World,
                           partner: str, robot_id: str, obj_id: Optional[str] = None) -> str:
    """Classify the partner's behavior this tick from situation facts.

    Walking away is judged against the robot's *previous* position, so the
    partner's own retreat registers even while the robot is chasing."""
    looked = facts.value_of(partner, IS_LOOKING_AT)
    if looked == robot_id or (obj_id is not None and looked == obj_id):
        return OBS_LOOKING
    if robot_id in facts.objects_of(partner, IS_MOVING_TOWARD):
        return OBS_MOVING_TOWARD
    if prev_world is not None and partner in prev_world.agents:
        anchor = prev_world.agents[robot_id].cell
        d_prev = chebyshev(prev_world.agents[partner].cell, anchor)
        d_now = chebyshev(world.agents[partner].cell, anchor)
        if d_now > d_prev:
            return OBS_MOVING_AWAY
    return OBS_IDLE


@dataclass
class JointActionSession:
    kind: str
    partner: str
    obj: str
    phase: str = APPROACH
    ticks_in_phase: int = 0
    disengaged_streak: int = 0
    waiting_ticks: int = 0
    abort_reason: Optional[str] = None

    @property
    def terminal(self) -> bool:
        return self.phase in (HANDOVER_DONE, HANDOVER_ABORTED)

    def to_wire(self) -> dict:
        return {"kind": self.kind, "partner": self.partner, "object": self.obj,
                "phase": self.phase, "disengagedStreak": self.disengaged_streak}


@dataclass
class HandoverOutput:
    action: Optional[Action] = None
    signal: Optional[CommAct] = None
    phase: str = APPROACH


def handover_step(session: JointActionSession, belief: EngagementBelief,
                  world: World, robot_id: str,
                  engaged_threshold: float = ENGAGED_THRESHOLD,
                  disengaged_threshold: float = DISENGAGED_THRESHOLD,
                  streak_limit: int = DISENGAGED_STREAK) -> HandoverOutput:
    """Advance the handover one tick; mutates the session, returns the
    robot's action (and possibly an attention signal) for this tick."""
    if session.terminal:
        return HandoverOutput(phase=session.phase)
    session.ticks_in_phase += 1

    holder = world.objects[session.obj].held_by
    if holder == session.partner:
        session.phase = HANDOVER_DONE
        return HandoverOutput(phase=session.phase)
    if holder != robot_id:
        session.phase = HANDOVER_ABORTED
        session.abort_reason = OBJECT_LOST
        return HandoverOutput(phase=session.phase)

    if belief.p(DISENGAGED) > disengaged_threshold:
        session.disengaged_streak += 1
    else:
        session.disengaged_streak = 0
    if session.disengaged_streak >= streak_limit:
        session.phase = HANDOVER_ABORTED
        session.abort_reason = PARTNER_DISENGAGED
        return HandoverOutput(phase=session.phase)

    robot = world.agents[robot_id]
    partner = world.agents[session.partner]
    adjacent = chebyshev(robot.cell, partner.cell) <= 1

    if not adjacent:
        session.phase = APPROACH
        view = skills.WorldView(world, robot_id)
        targets = [c for c in _adjacent_cells(world, partner.cell)
                   if not world.blocking(c)]
        move = skills.next_move(view, robot_id, targets)
        if move is not None:
            session.waiting_ticks = 0
            return HandoverOutput(action=move, phase=session.phase)
        return _waiting(session, robot_id)

    if belief.p(ENGAGED) > engaged_threshold and partner.holding is None:
        session.phase = EXTEND
        session.waiting_ticks = 0
        return HandoverOutput(action=Action.give(session.obj, session.partner),
                              phase=session.phase)

    return _waiting(session, robot_id)


def _waiting(session: JointActionSession, robot_id: str) -> HandoverOutput:
    session.waiting_ticks += 1
    if session.waiting_ticks % SIGNAL_CADENCE == 0:
        sig = CommAct.make_signal(robot_id, session.partner, LOOK_AT, session.partner)
        return HandoverOutput(action=express(sig), signal=sig, phase=session.phase)
    return HandoverOutput(action=Action.wait(), phase=session.phase)


def _adjacent_cells(world: World, cell: tuple) -> list:
    out = []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            c = (cell[0] + dx, cell[1] + dy)
            if world.in_bounds(c):
                out.append(c)
    return sorted(out)


def _manipulation_target_cell(world: World, actor: str, action: Action) -> Optional[tuple]:
    if action.kind not in MANIPULATION_KINDS:
        return None
    if action.kind == "place":
        return action.cell
    if action.kind in ("give", "take"):
        other = world.agents.get(action.agent)
        return None if other is None else other.cell
    if action.obj is not None:
        return world.entity_cell(action.obj)
    return None


def safety_gate(robot_action: Optional[Action], world: World,
                pending_human_actions: dict, last_events: Iterable[Event],
                robot_id: str) -> str:
    """Hold a robot manipulation aimed at a workspace where a human just
    manipulated or is about to; Move/LookAt/PointAt always pass."""
    if robot_action is None or robot_action.kind not in MANIPULATION_KINDS:
        return ALLOW
    target = _manipulation_target_cell(world, robot_id, robot_action)
    if target is None:
        return ALLOW
    ws = world.cell_at(target).workspace if world.in_bounds(target) else None
    if ws is None:
        return ALLOW

    humans = [aid for aid, a in world.agents.items() if a.kind == "human"]

    for ev in last_events:
        if ev.actor not in humans or not ev.succeeded:
            continue
        cell = _manipulation_target_cell(world, ev.actor, ev.action)
        if cell is not None and world.in_bounds(cell) and world.cell_at(cell).workspace == ws:
            return HOLD

    ws_cells = world.workspace_cells(ws)
    for aid in humans:
        act = pending_human_actions.get(aid)
        if act is None or act.kind not in MANIPULATION_KINDS:
            continue
        reach = world.agents[aid].reach_radius
        near = any(chebyshev(world.agents[aid].cell, c) <= reach for c in ws_cells)
        cell = _manipulation_target_cell(world, aid, act)
        targets_ws = cell is not None and world.in_bounds(cell) and \
            world.cell_at(cell).workspace == ws
        if targets_ws or near:
            return HOLD
    return ALLOW


def express(signal_act: CommAct) -> Action:
    """Compile a deictic signal into the kernel gesture (head orientation
    stands in for gaze)."""
    if signal_act.signal == LOOK_AT:
        return Action.look_at(signal_act.target)
    if signal_act.signal == POINT_AT:
        return Action.point_at(signal_act.target)
    raise ValueError(f"unknown signal {signal_act.signal}")
