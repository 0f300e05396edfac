"""Deterministic tick-based grid world.

Entities (agents and objects) live on a rectangular grid of cells with
blocking walls, room labels, optional workspace labels and surface flags.
All agents act simultaneously each tick; conflicts are resolved by
lexicographic agent-id priority, losers fail with a reason code. `step`
is a pure function of (world, actions): replaying an action sequence
reproduces every intermediate world exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

DIRECTIONS = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")
DIR_VECTORS = {
    "N": (0, -1), "NE": (1, -1), "E": (1, 0), "SE": (1, 1),
    "S": (0, 1), "SW": (-1, 1), "W": (-1, 0), "NW": (-1, -1),
}
# Screen coordinates: y grows downward, so N is angle +90.
DIR_ANGLES = {
    "E": 0.0, "NE": 45.0, "N": 90.0, "NW": 135.0,
    "W": 180.0, "SW": -135.0, "S": -90.0, "SE": -45.0,
}

MOVE = "move"
PICKUP = "pickup"
PLACE = "place"
GIVE = "give"
TAKE = "take"
LOOK_AT = "look_at"
POINT_AT = "point_at"
STATE_OP = "state_op"
WAIT = "wait"

MANIPULATION_KINDS = frozenset({PICKUP, PLACE, GIVE, TAKE, STATE_OP})

# Failure reason codes.
NOT_REACHABLE = "NOT_REACHABLE"
HANDS_FULL = "HANDS_FULL"
CELL_BLOCKED = "CELL_BLOCKED"
CELL_OCCUPIED = "CELL_OCCUPIED"
TAKEN = "TAKEN"
NOT_HOLDING = "NOT_HOLDING"
NOT_ADJACENT = "NOT_ADJACENT"
NO_SUCH_ENTITY = "NO_SUCH_ENTITY"
UNKNOWN_PROP = "UNKNOWN_PROP"
INVALID = "INVALID"

POINT_PERSIST_TICKS = 3


@dataclass(frozen=True)
class Action:
    """One primitive action. `kind` selects which fields are meaningful."""

    kind: str
    direction: Optional[str] = None
    obj: Optional[str] = None
    agent: Optional[str] = None
    cell: Optional[tuple] = None
    target: Optional[str] = None
    prop: Optional[str] = None
    value: object = None

    @staticmethod
    def move(direction: str) -> "Action":
        return Action(MOVE, direction=direction)

    @staticmethod
    def pickup(obj: str) -> "Action":
        return Action(PICKUP, obj=obj)

    @staticmethod
    def place(obj: str, cell: tuple) -> "Action":
        return Action(PLACE, obj=obj, cell=tuple(cell))

    @staticmethod
    def give(obj: str, agent: str) -> "Action":
        return Action(GIVE, obj=obj, agent=agent)

    @staticmethod
    def take(obj: str, agent: str) -> "Action":
        return Action(TAKE, obj=obj, agent=agent)

    @staticmethod
    def look_at(target: str) -> "Action":
        return Action(LOOK_AT, target=target)

    @staticmethod
    def point_at(target: str) -> "Action":
        return Action(POINT_AT, target=target)

    @staticmethod
    def state_op(obj: str, prop: str, value) -> "Action":
        return Action(STATE_OP, obj=obj, prop=prop, value=value)

    @staticmethod
    def wait() -> "Action":
        return Action(WAIT)

    def to_wire(self) -> dict:
        out = {"kind": self.kind}
        for name in ("direction", "obj", "agent", "target", "prop"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        if self.cell is not None:
            out["cell"] = list(self.cell)
        if self.value is not None or self.kind == STATE_OP:
            out["value"] = self.value
        return out

    @staticmethod
    def from_wire(data: dict) -> "Action":
        cell = tuple(data["cell"]) if data.get("cell") is not None else None
        return Action(
            data["kind"],
            direction=data.get("direction"),
            obj=data.get("obj"),
            agent=data.get("agent"),
            cell=cell,
            target=data.get("target"),
            prop=data.get("prop"),
            value=data.get("value"),
        )


@dataclass(frozen=True)
class Event:
    tick: int
    actor: str
    action: Action
    outcome: str  # "succeeded" | "failed"
    reason: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.outcome == "succeeded"

    def to_wire(self) -> dict:
        out = {"tick": self.tick, "actor": self.actor,
               "action": self.action.to_wire(), "outcome": self.outcome}
        if self.reason is not None:
            out["reason"] = self.reason
        return out


@dataclass(frozen=True)
class Cell:
    blocking: bool
    room: str
    workspace: Optional[str] = None
    surface: bool = False


@dataclass
class AgentState:
    id: str
    kind: str  # "robot" | "human"
    cell: tuple
    heading: str = "N"
    holding: Optional[str] = None
    reach_radius: int = 1
    view_range: int = 6
    view_half_angle: float = 60.0
    pointing_at: Optional[str] = None
    pointing_tick: int = -10

    def copy(self) -> "AgentState":
        return replace(self)


@dataclass
class ObjState:
    id: str
    type_label: str
    cell: Optional[tuple] = None
    held_by: Optional[str] = None
    on_surface: bool = False
    props: dict = field(default_factory=dict)

    def copy(self) -> "ObjState":
        c = replace(self)
        c.props = dict(self.props)
        return c


@dataclass
class World:
    width: int
    height: int
    cells: list  # cells[y][x] -> Cell
    agents: dict  # id -> AgentState
    objects: dict  # id -> ObjState
    tick: int = 0
    prop_domains: dict = field(default_factory=dict)  # prop name -> tuple of values

    # -- queries ---------------------------------------------------------

    def in_bounds(self, cell: tuple) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def cell_at(self, cell: tuple) -> Cell:
        x, y = cell
        return self.cells[y][x]

    def blocking(self, cell: tuple) -> bool:
        return not self.in_bounds(cell) or self.cell_at(cell).blocking

    def room_of(self, cell: tuple) -> Optional[str]:
        if not self.in_bounds(cell):
            return None
        c = self.cell_at(cell)
        return None if c.blocking else c.room

    def entity_ids(self) -> list:
        return sorted(list(self.agents) + list(self.objects))

    def has_entity(self, eid: str) -> bool:
        return eid in self.agents or eid in self.objects

    def entity_cell(self, eid: str) -> Optional[tuple]:
        """Effective cell: held objects report their holder's cell."""
        if eid in self.agents:
            return self.agents[eid].cell
        obj = self.objects.get(eid)
        if obj is None:
            return None
        if obj.held_by is not None:
            return self.agents[obj.held_by].cell
        return obj.cell

    def agent_at(self, cell: tuple) -> Optional[str]:
        for aid in sorted(self.agents):
            if self.agents[aid].cell == cell:
                return aid
        return None

    def workspace_cells(self, label: str) -> list:
        out = []
        for y in range(self.height):
            for x in range(self.width):
                if self.cells[y][x].workspace == label:
                    out.append((x, y))
        return out

    def copy(self) -> "World":
        return World(
            width=self.width,
            height=self.height,
            cells=self.cells,  # static, never mutated
            agents={k: v.copy() for k, v in self.agents.items()},
            objects={k: v.copy() for k, v in self.objects.items()},
            tick=self.tick,
            prop_domains=self.prop_domains,
        )

    def check_invariants(self) -> None:
        for aid, ag in self.agents.items():
            if self.blocking(ag.cell):
                raise ValueError(f"agent {aid} on blocking cell {ag.cell}")
            if ag.holding is not None:
                obj = self.objects.get(ag.holding)
                if obj is None or obj.held_by != aid:
                    raise ValueError(f"agent {aid} holding inconsistency")
        for oid, obj in self.objects.items():
            if obj.held_by is not None:
                if obj.cell is not None:
                    raise ValueError(f"object {oid} both held and placed")
                holder = self.agents.get(obj.held_by)
                if holder is None or holder.holding != oid:
                    raise ValueError(f"object {oid} holder inconsistency")
            else:
                if obj.cell is None or self.blocking(obj.cell):
                    raise ValueError(f"object {oid} has no legal cell")


# -- geometry -------------------------------------------------------------

def chebyshev(a: tuple, b: tuple) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def direction_toward(src: tuple, dst: tuple) -> Optional[str]:
    """Nearest of the 8 compass directions from src to dst, None if equal."""
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    if dx == 0 and dy == 0:
        return None
    angle = math.degrees(math.atan2(-dy, dx))
    best, best_err = None, 1e9
    for d in DIRECTIONS:
        err = abs((angle - DIR_ANGLES[d] + 180.0) % 360.0 - 180.0)
        if err < best_err - 1e-9:
            best, best_err = d, err
    return best


def angle_between(heading: str, src: tuple, dst: tuple) -> float:
    """Absolute angular offset (degrees) of dst from the heading ray at src."""
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    if dx == 0 and dy == 0:
        return 0.0
    angle = math.degrees(math.atan2(-dy, dx))
    return abs((angle - DIR_ANGLES[heading] + 180.0) % 360.0 - 180.0)


def bresenham(a: tuple, b: tuple) -> list:
    """Integer line from a to b inclusive."""
    x0, y0 = a
    x1, y1 = b
    points = []
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        points.append((x0, y0))
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy
    return points


def line_of_sight(world: World, a: tuple, b: tuple) -> bool:
    """True when no strictly-intermediate cell on the Bresenham line blocks."""
    for cell in bresenham(a, b)[1:-1]:
        if world.blocking(cell):
            return False
    return True


def can_see(world: World, agent: AgentState, target_cell: tuple) -> bool:
    if agent.cell == target_cell:
        return True
    if chebyshev(agent.cell, target_cell) > agent.view_range:
        return False
    if angle_between(agent.heading, agent.cell, target_cell) > agent.view_half_angle + 1e-9:
        return False
    return line_of_sight(world, agent.cell, target_cell)


def can_reach(world: World, agent: AgentState, target_cell: tuple) -> bool:
    if chebyshev(agent.cell, target_cell) > agent.reach_radius:
        return False
    return world.room_of(agent.cell) == world.room_of(target_cell)


# -- stepping -------------------------------------------------------------

def _fail(tick: int, actor: str, action: Action, reason: str) -> Event:
    return Event(tick, actor, action, "failed", reason)


def _ok(tick: int, actor: str, action: Action) -> Event:
    return Event(tick, actor, action, "succeeded")


def _transfer(world: World, obj_id: str, from_agent: Optional[str], to_agent: Optional[str],
              cell: Optional[tuple] = None) -> None:
    obj = world.objects[obj_id]
    if from_agent is not None:
        world.agents[from_agent].holding = None
    if to_agent is not None:
        world.agents[to_agent].holding = obj_id
        obj.held_by = to_agent
        obj.cell = None
        obj.on_surface = False
    else:
        obj.held_by = None
        obj.cell = tuple(cell)
        obj.on_surface = world.cell_at(cell).surface


def _check_give(world: World, actor: str, action: Action) -> Optional[str]:
    ag = world.agents[actor]
    if action.agent not in world.agents or action.agent == actor:
        return NO_SUCH_ENTITY
    if ag.holding != action.obj:
        return NOT_HOLDING
    if chebyshev(ag.cell, world.agents[action.agent].cell) > 1:
        return NOT_ADJACENT
    if world.agents[action.agent].holding is not None:
        return HANDS_FULL
    return None


def _check_take(world: World, actor: str, action: Action) -> Optional[str]:
    ag = world.agents[actor]
    if action.agent not in world.agents or action.agent == actor:
        return NO_SUCH_ENTITY
    if ag.holding is not None:
        return HANDS_FULL
    holder = world.agents[action.agent]
    if holder.holding != action.obj:
        return TAKEN
    if chebyshev(ag.cell, holder.cell) > 1:
        return NOT_ADJACENT
    return None


def _apply_single(world: World, actor: str, action: Action, tick: int) -> Event:
    """Apply one agent's action against the current (mid-tick) state."""
    ag = world.agents[actor]
    kind = action.kind

    if kind == WAIT:
        return _ok(tick, actor, action)

    if kind == MOVE:
        if action.direction not in DIR_VECTORS:
            return _fail(tick, actor, action, INVALID)
        dx, dy = DIR_VECTORS[action.direction]
        dest = (ag.cell[0] + dx, ag.cell[1] + dy)
        if world.blocking(dest):
            return _fail(tick, actor, action, CELL_BLOCKED)
        if world.agent_at(dest) is not None:
            return _fail(tick, actor, action, CELL_OCCUPIED)
        ag.cell = dest
        ag.heading = action.direction
        return _ok(tick, actor, action)

    if kind == PICKUP:
        obj = world.objects.get(action.obj)
        if obj is None:
            return _fail(tick, actor, action, NO_SUCH_ENTITY)
        if ag.holding is not None:
            return _fail(tick, actor, action, HANDS_FULL)
        if obj.held_by is not None:
            return _fail(tick, actor, action, TAKEN)
        if not can_reach(world, ag, obj.cell):
            return _fail(tick, actor, action, NOT_REACHABLE)
        _transfer(world, action.obj, None, actor)
        return _ok(tick, actor, action)

    if kind == PLACE:
        if ag.holding != action.obj:
            return _fail(tick, actor, action, NOT_HOLDING)
        dest = action.cell
        if dest is None or world.blocking(dest):
            return _fail(tick, actor, action, CELL_BLOCKED)
        if not can_reach(world, ag, dest):
            return _fail(tick, actor, action, NOT_REACHABLE)
        _transfer(world, action.obj, actor, None, cell=dest)
        return _ok(tick, actor, action)

    if kind == GIVE:
        reason = _check_give(world, actor, action)
        if reason is not None:
            return _fail(tick, actor, action, reason)
        _transfer(world, action.obj, actor, action.agent)
        return _ok(tick, actor, action)

    if kind == TAKE:
        reason = _check_take(world, actor, action)
        if reason is not None:
            return _fail(tick, actor, action, reason)
        _transfer(world, action.obj, action.agent, actor)
        return _ok(tick, actor, action)

    if kind in (LOOK_AT, POINT_AT):
        if not world.has_entity(action.target) or action.target == actor:
            return _fail(tick, actor, action, NO_SUCH_ENTITY)
        tcell = world.entity_cell(action.target)
        d = direction_toward(ag.cell, tcell)
        if d is not None:
            ag.heading = d
        if kind == POINT_AT:
            ag.pointing_at = action.target
            ag.pointing_tick = tick
        return _ok(tick, actor, action)

    if kind == STATE_OP:
        obj = world.objects.get(action.obj)
        if obj is None:
            return _fail(tick, actor, action, NO_SUCH_ENTITY)
        if action.prop not in world.prop_domains:
            return _fail(tick, actor, action, UNKNOWN_PROP)
        if action.value not in world.prop_domains[action.prop]:
            return _fail(tick, actor, action, INVALID)
        within = obj.held_by == actor or (
            obj.held_by is None and can_reach(world, ag, obj.cell))
        if not within:
            return _fail(tick, actor, action, NOT_REACHABLE)
        obj.props[action.prop] = action.value
        return _ok(tick, actor, action)

    return _fail(tick, actor, action, INVALID)


def step(world: World, actions: dict) -> tuple:
    """Apply all agents' actions simultaneously; returns (world', events).

    Agents absent from `actions` Wait. Conflicts resolve in lexicographic
    agent-id order; matched Give/Take pairs execute as a single transfer
    with both events succeeding.
    """
    w = world.copy()
    tick = w.tick + 1
    acts = {aid: actions.get(aid, Action.wait()) for aid in sorted(w.agents)}
    for aid in actions:
        if aid not in w.agents:
            raise KeyError(f"unknown agent {aid}")

    events: dict = {}

    # Matched handover pairs first: A gives o to B while B takes o from A.
    for aid in sorted(acts):
        a = acts[aid]
        if a.kind != GIVE or aid in events:
            continue
        partner = a.agent
        b = acts.get(partner)
        if b is None or b.kind != TAKE or b.obj != a.obj or b.agent != aid:
            continue
        if partner in events:
            continue
        reason = _check_give(w, aid, a)
        if reason is None:
            _transfer(w, a.obj, aid, partner)
            events[aid] = _ok(tick, aid, a)
            events[partner] = _ok(tick, partner, b)

    for aid in sorted(acts):
        if aid in events:
            continue
        events[aid] = _apply_single(w, aid, acts[aid], tick)

    w.tick = tick
    return w, [events[aid] for aid in sorted(events)]


def legal_actions(world: World, agent_id: str) -> set:
    """Exactly the actions that would succeed if this agent acted alone."""
    if agent_id not in world.agents:
        raise KeyError(f"unknown agent {agent_id}")
    ag = world.agents[agent_id]
    out = {Action.wait()}

    for d in DIRECTIONS:
        dx, dy = DIR_VECTORS[d]
        dest = (ag.cell[0] + dx, ag.cell[1] + dy)
        if not world.blocking(dest) and world.agent_at(dest) is None:
            out.add(Action.move(d))

    for eid in world.entity_ids():
        if eid != agent_id:
            out.add(Action.look_at(eid))
            out.add(Action.point_at(eid))

    if ag.holding is None:
        for oid in sorted(world.objects):
            obj = world.objects[oid]
            if obj.held_by is None and can_reach(world, ag, obj.cell):
                out.add(Action.pickup(oid))
        for oid in sorted(world.objects):
            obj = world.objects[oid]
            holder = obj.held_by
            if holder is not None and holder != agent_id and \
                    chebyshev(ag.cell, world.agents[holder].cell) <= 1:
                out.add(Action.take(oid, holder))
    else:
        for y in range(world.height):
            for x in range(world.width):
                dest = (x, y)
                if not world.blocking(dest) and can_reach(world, ag, dest):
                    out.add(Action.place(ag.holding, dest))
        for aid in sorted(world.agents):
            other = world.agents[aid]
            if aid != agent_id and other.holding is None and \
                    chebyshev(ag.cell, other.cell) <= 1:
                out.add(Action.give(ag.holding, aid))

    for oid in sorted(world.objects):
        obj = world.objects[oid]
        reachable = obj.held_by == agent_id or (
            obj.held_by is None and can_reach(world, ag, obj.cell))
        if not reachable:
            continue
        for prop in sorted(world.prop_domains):
            for value in world.prop_domains[prop]:
                out.add(Action.state_op(oid, prop, value))

    return out
