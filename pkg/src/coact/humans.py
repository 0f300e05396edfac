"""Deterministic simulated humans, plus an adapter for an external driver.

Every human keeps a private believed world, updated through the same
visibility geometry the robot uses for perspective taking. Decisions are
made *in that believed world*: a human will happily walk to where it last
saw an object and fail to pick it up; that failure is what the robot's
divergence repair exists for. All randomness comes from the policy's own
seeded generator, so runs replay exactly.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from . import skills
from .comm import (
    ACCEPT_PLAN,
    CommAct,
    EXPLAIN,
    INFORM,
    PROPOSE_PLAN,
    REJECT_PLAN,
    REQUEST_ACTION,
)
from .situation import IS_HOLDING, IS_IN, IS_ON
from .world import Action, World, can_see, chebyshev

COOPERATIVE = "Cooperative"
DISTRACTED = "Distracted"
RELUCTANT = "Reluctant"
SCRIPTED = "Scripted"
INTERACTIVE = "Interactive"

POLICY_KINDS = (COOPERATIVE, DISTRACTED, RELUCTANT, SCRIPTED, INTERACTIVE)

ATTEND_RADIUS = 2  # idle humans look at a robot this close


@dataclass
class PolicyConfig:
    kind: str = COOPERATIVE
    seed: int = 0
    wait_prob: float = 0.3
    view_range: Optional[int] = None  # Distracted defaults to 3
    refuse: dict = field(default_factory=dict)  # Reluctant's first-reject constraints
    script: tuple = ()  # wire-form actions for Scripted
    unknown_tasks: tuple = ()

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind}")
        if self.kind == DISTRACTED and self.view_range is None:
            self.view_range = 3

    @staticmethod
    def from_wire(data: dict) -> "PolicyConfig":
        return PolicyConfig(
            kind=data.get("kind", COOPERATIVE),
            seed=data.get("seed", 0),
            wait_prob=data.get("waitProb", 0.3),
            view_range=data.get("viewRange"),
            refuse=data.get("refuse", {}),
            script=tuple(data.get("script", ())),
            unknown_tasks=tuple(data.get("unknownTasks", ())),
        )


class BelievedWorld:
    """A human's private world model; implements the skills view protocol."""

    def __init__(self, world: World, self_id: str):
        self.world_static = world  # grid geometry only; entity state not read
        self.self_id = self_id
        self.agent_cells_map: dict = {self_id: world.agents[self_id].cell}
        self.obj_cells: dict = {}  # obj -> cell | None
        self.obj_holders: dict = {}  # obj -> agent | None
        self.hints: dict = {}  # obj -> tuple of candidate cells
        self.props: dict = {}  # (obj, prop) -> value

    # -- view protocol -----------------------------------------------------

    @property
    def width(self):
        return self.world_static.width

    @property
    def height(self):
        return self.world_static.height

    def blocking(self, cell) -> bool:
        return self.world_static.blocking(cell)

    def room_of(self, cell):
        return self.world_static.room_of(cell)

    def agent_cells(self) -> dict:
        return dict(self.agent_cells_map)

    def entity_cell(self, eid) -> Optional[tuple]:
        if eid in self.agent_cells_map:
            return self.agent_cells_map[eid]
        if self.obj_holders.get(eid) is not None:
            return None
        return self.obj_cells.get(eid)

    def entity_hint(self, eid) -> tuple:
        return self.hints.get(eid, ())

    def holding(self, agent_id) -> Optional[str]:
        for obj, holder in sorted(self.obj_holders.items()):
            if holder == agent_id:
                return obj
        return None

    def held_by(self, obj_id) -> Optional[str]:
        return self.obj_holders.get(obj_id)

    def reach(self, agent_id) -> int:
        return self.world_static.agents[agent_id].reach_radius

    def workspace_cells(self, label) -> list:
        return self.world_static.workspace_cells(label)

    def room_cells(self, room) -> list:
        out = []
        for y in range(self.height):
            for x in range(self.width):
                if self.room_of((x, y)) == room:
                    out.append((x, y))
        return out

    def objects_at(self, cell) -> list:
        cell = tuple(cell)
        return sorted(o for o, c in self.obj_cells.items()
                      if c == cell and self.obj_holders.get(o) is None)

    # -- updates -----------------------------------------------------------

    def perceive(self, world: World) -> None:
        """Copy true placements of everything currently visible; observe
        absences at believed cells that are in view."""
        me = world.agents[self.self_id]
        self.agent_cells_map[self.self_id] = me.cell

        for aid, ag in world.agents.items():
            if aid == self.self_id:
                continue
            if can_see(world, me, ag.cell):
                self.agent_cells_map[aid] = ag.cell

        for oid, obj in world.objects.items():
            cell = world.entity_cell(oid)
            if cell is not None and can_see(world, me, cell):
                if obj.held_by is not None:
                    self.obj_holders[oid] = obj.held_by
                    self.obj_cells[oid] = None
                else:
                    self.obj_holders[oid] = None
                    self.obj_cells[oid] = obj.cell
                self.hints.pop(oid, None)
                for prop, value in obj.props.items():
                    self.props[(oid, prop)] = value

        # absence: believed location is visible but the object is not there
        for oid, cell in list(self.obj_cells.items()):
            if cell is None or self.obj_holders.get(oid) is not None:
                continue
            truly_there = world.objects.get(oid) is not None and \
                world.objects[oid].held_by is None and world.objects[oid].cell == cell
            if not truly_there and can_see(world, me, cell):
                self.obj_cells[oid] = None

        # a believed holder seen empty-handed no longer holds it
        for oid, holder in list(self.obj_holders.items()):
            if holder is None or holder == self.self_id:
                continue
            if holder in world.agents and can_see(world, me, world.agents[holder].cell):
                if world.agents[holder].holding != oid:
                    self.obj_holders[oid] = None

        if me.holding is not None:
            self.obj_holders[me.holding] = self.self_id
            self.obj_cells[me.holding] = None
        else:
            for oid, holder in list(self.obj_holders.items()):
                if holder == self.self_id:
                    self.obj_holders[oid] = None

    def apply_inform(self, fact) -> None:
        from .mental import STEP_STATUS
        if fact.predicate == STEP_STATUS:
            return
        if fact.predicate == IS_IN and fact.subject in self.world_static.objects:
            believed = self.obj_cells.get(fact.subject)
            if believed is not None and self.room_of(believed) == fact.obj:
                return
            self.obj_cells[fact.subject] = None
            self.obj_holders[fact.subject] = None
            self.hints[fact.subject] = tuple(self.room_cells(fact.obj))
        elif fact.predicate == IS_ON and fact.subject in self.world_static.objects:
            self.obj_cells[fact.subject] = None
            self.obj_holders[fact.subject] = None
            self.hints[fact.subject] = tuple(self.workspace_cells(fact.obj))
        elif fact.predicate == IS_HOLDING:
            self.obj_holders[fact.obj] = fact.subject
            self.obj_cells[fact.obj] = None
        elif isinstance(fact.obj, (bool, str)):
            self.props[(fact.subject, fact.predicate)] = fact.obj

    def seed_placement(self, obj_id: str, cell=None, room=None, workspace=None) -> None:
        if cell is not None:
            self.obj_cells[obj_id] = tuple(cell)
            self.obj_holders[obj_id] = None
        elif room is not None:
            self.hints[obj_id] = tuple(self.room_cells(room))
        elif workspace is not None:
            self.hints[obj_id] = tuple(self.workspace_cells(workspace))


class HumanDriver:
    """Turns a policy config into per-tick decisions for one human agent."""

    def __init__(self, agent_id: str, config: PolicyConfig, world: World,
                 robot_id: str):
        self.agent_id = agent_id
        self.config = config
        self.robot_id = robot_id
        self.rng = random.Random(config.seed)
        self.believed = BelievedWorld(world, agent_id)
        self.believed.perceive(world)
        self.inbox: list = []
        self.pending_step: Optional[dict] = None
        self.step_state: dict = {}
        self.unknown_tasks = set(config.unknown_tasks)
        self.rejected_once = False
        self.script = deque(Action.from_wire(a) for a in config.script)
        self.injected_actions: deque = deque()
        self.injected_comms: deque = deque()

    def deliver(self, act: CommAct) -> None:
        self.inbox.append(act)

    def inject_action(self, action: Action) -> None:
        self.injected_actions.append(action)

    def inject_comm(self, act: CommAct) -> None:
        self.injected_comms.append(act)

    # -- decision ------------------------------------------------------------

    def decide(self, world: World, tick: int) -> tuple:
        """Returns (Action, outbox). Processes perception, then the inbox,
        then picks an action legal in the believed world."""
        self.believed.perceive(world)
        outbox: list = []

        for act in self.inbox:
            self._process(act, outbox, tick)
        self.inbox.clear()

        if self.config.kind == INTERACTIVE:
            while self.injected_comms:
                outbox.append(self.injected_comms.popleft())
            action = self.injected_actions.popleft() if self.injected_actions \
                else Action.wait()
            return action, outbox

        if self.config.kind == SCRIPTED:
            action = self.script.popleft() if self.script else Action.wait()
            return action, outbox

        if self.config.kind == DISTRACTED and self.rng.random() < self.config.wait_prob:
            return Action.wait(), outbox

        return self._task_action(world), outbox

    def _process(self, act: CommAct, outbox: list, tick: int) -> None:
        if act.kind == INFORM:
            self.believed.apply_inform(act.fact)
        elif act.kind == EXPLAIN:
            self.unknown_tasks.discard(act.task)
        elif act.kind == PROPOSE_PLAN:
            if self.config.kind == RELUCTANT and not self.rejected_once:
                self.rejected_once = True
                outbox.append(CommAct.reject_plan(
                    self.agent_id, act.sender, act.plan_id, self.config.refuse, tick))
            elif self.config.kind == INTERACTIVE:
                pass  # the external driver answers via inject_comm
            else:
                outbox.append(CommAct.accept_plan(
                    self.agent_id, act.sender, act.plan_id, tick))
        elif act.kind == REQUEST_ACTION:
            self.pending_step = dict(act.step_payload)
            self.step_state = {}

    def _task_action(self, world: World) -> Action:
        if self.pending_step is not None:
            op = self.pending_step.get("op")
            if op is not None and op in self.unknown_tasks:
                return Action.wait()
            realize = self.pending_step.get("realize") or {}
            action = skills.step_action(self.believed, self.agent_id, realize,
                                        self.step_state)
            if action is not None:
                return action
        robot_cell = self.believed.agent_cells_map.get(self.robot_id)
        me = self.believed.agent_cells_map[self.agent_id]
        if robot_cell is not None and 0 < chebyshev(me, robot_cell) <= ATTEND_RADIUS:
            return Action.look_at(self.robot_id)
        return Action.wait()
