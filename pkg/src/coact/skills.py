"""Step realization: compile plan operators into per-tick primitives.

Works against a *view* (true world for the robot, a believed world for a
simulated human), so the same machinery produces both competent robot
behavior and belief-bounded human behavior, including walking to a stale
object location. Views provide cell lookups, holdings, workspace cells,
reach parameters and optional location hints for entities whose exact
cell the viewer does not know.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Optional

from .world import Action, DIRECTIONS, DIR_VECTORS, World, chebyshev


class WorldView:
    """Ground-truth view used by the robot executive."""

    def __init__(self, world: World, viewer: str):
        self.world = world
        self.viewer = viewer

    @property
    def width(self):
        return self.world.width

    @property
    def height(self):
        return self.world.height

    def blocking(self, cell) -> bool:
        return self.world.blocking(cell)

    def room_of(self, cell):
        return self.world.room_of(cell)

    def agent_cells(self) -> dict:
        return {aid: a.cell for aid, a in self.world.agents.items()}

    def entity_cell(self, eid) -> Optional[tuple]:
        if eid in self.world.objects and self.world.objects[eid].held_by is not None:
            return None  # in someone's hand, not at a pickable cell
        return self.world.entity_cell(eid)

    def entity_hint(self, eid) -> tuple:
        return ()

    def holding(self, agent_id) -> Optional[str]:
        return self.world.agents[agent_id].holding

    def held_by(self, obj_id) -> Optional[str]:
        obj = self.world.objects.get(obj_id)
        return None if obj is None else obj.held_by

    def reach(self, agent_id) -> int:
        return self.world.agents[agent_id].reach_radius

    def workspace_cells(self, label) -> list:
        return self.world.workspace_cells(label)

    def objects_at(self, cell) -> list:
        return sorted(o.id for o in self.world.objects.values()
                      if o.held_by is None and o.cell == tuple(cell))

    def room_cells(self, room) -> list:
        out = []
        for y in range(self.height):
            for x in range(self.width):
                if self.world.room_of((x, y)) == room:
                    out.append((x, y))
        return out


def reachable_from(view, agent_id: str, cell) -> bool:
    me = view.agent_cells()[agent_id]
    if chebyshev(me, cell) > view.reach(agent_id):
        return False
    return view.room_of(me) == view.room_of(cell)


def approach_cells(view, agent_id: str, target: tuple) -> list:
    """Cells from which `target` is within reach (includes target itself)."""
    r = view.reach(agent_id)
    out = []
    tx, ty = target
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            c = (tx + dx, ty + dy)
            if not view.blocking(c) and view.room_of(c) == view.room_of(target):
                out.append(c)
    return sorted(out)


def next_move(view, agent_id: str, targets: Iterable[tuple]) -> Optional[Action]:
    """First move of a shortest 8-connected path to the nearest target cell.

    Other agents' (believed) cells block, except target cells themselves.
    Returns None when already on a target or no path exists.
    """
    targets = {tuple(t) for t in targets}
    if not targets:
        return None
    start = view.agent_cells()[agent_id]
    if start in targets:
        return None
    occupied = {c for aid, c in view.agent_cells().items() if aid != agent_id}
    targets -= occupied  # cannot finish on someone's head
    if not targets:
        return None
    parent = {start: None}
    queue = deque([start])
    found = None
    while queue:
        cur = queue.popleft()
        if cur in targets:
            found = cur
            break
        for d in DIRECTIONS:
            dx, dy = DIR_VECTORS[d]
            nxt = (cur[0] + dx, cur[1] + dy)
            if nxt in parent or view.blocking(nxt) or nxt in occupied:
                continue
            parent[nxt] = (cur, d)
            queue.append(nxt)
    if found is None:
        return None
    cell, direction = found, None
    while parent[cell] is not None:
        cell, direction = parent[cell]
    return Action.move(direction) if direction else None


def free_surface_cells(view, label: str) -> list:
    cells = view.workspace_cells(label)
    free = [c for c in cells if not view.objects_at(c)]
    return free if free else cells


def ground_realize(realize: dict, step) -> dict:
    """Step realize specs are grounded at planning time; args fill any
    leftover positional placeholders."""
    return dict(realize)


def step_action(view, agent_id: str, realize: dict, state: dict) -> Optional[Action]:
    """Next primitive advancing this step, or None when nothing useful.

    `state` is a per-step scratch dict (exploration progress). Completion
    is judged by the caller from facts; an unexecutable step simply yields
    None, which callers turn into Wait.
    """
    kind = realize.get("kind")
    if kind in ("transport", "pick", "place"):
        obj = realize["obj"]
        dest = realize.get("to")
        holder = view.held_by(obj)
        if kind != "pick" and _delivered(view, obj, dest):
            return None  # already where it belongs
        if holder == agent_id:
            if kind == "pick":
                return None  # holding it is the whole job
            return _place_on(view, agent_id, obj, dest)
        if holder is not None:
            return None  # someone else has it; nothing sensible to do
        if kind == "place":
            return None  # must be holding it first
        return _fetch(view, agent_id, obj, state)
    if kind == "stateop":
        return _state_op(view, agent_id, realize, state)
    if kind == "goto":
        return _goto(view, agent_id, realize)
    return None


def _delivered(view, obj: str, dest) -> bool:
    if dest is None or view.held_by(obj) is not None:
        return False
    cell = view.entity_cell(obj)
    if cell is None:
        return False
    if isinstance(dest, str):
        return cell in set(map(tuple, view.workspace_cells(dest)))
    return cell == tuple(dest)


def _fetch(view, agent_id: str, obj: str, state: dict) -> Optional[Action]:
    cell = view.entity_cell(obj)
    if cell is not None:
        if reachable_from(view, agent_id, cell):
            return Action.pickup(obj)
        return next_move(view, agent_id, approach_cells(view, agent_id, cell))
    hints = [tuple(c) for c in view.entity_hint(obj)]
    if not hints:
        return None
    visited = state.setdefault("explored", set())
    me = view.agent_cells()[agent_id]
    if me in hints:
        visited.add(me)
    remaining = [c for c in hints if c not in visited]
    if not remaining:
        return None
    move = next_move(view, agent_id, remaining)
    if move is None and me in remaining:
        visited.add(me)
    return move


def _place_on(view, agent_id: str, obj: str, dest) -> Optional[Action]:
    if dest is None:
        return None
    if isinstance(dest, str):
        cells = free_surface_cells(view, dest)
    else:
        cells = [tuple(dest)]
    if not cells:
        return None
    me = view.agent_cells()[agent_id]
    in_reach = [c for c in cells if reachable_from(view, agent_id, c)]
    if in_reach:
        target = min(in_reach, key=lambda c: (chebyshev(me, c), c))
        return Action.place(obj, target)
    targets = []
    for c in cells:
        targets.extend(approach_cells(view, agent_id, c))
    return next_move(view, agent_id, targets)


def _state_op(view, agent_id: str, realize: dict, state: dict) -> Optional[Action]:
    obj = realize["obj"]
    holder = view.held_by(obj)
    if holder == agent_id:
        return Action.state_op(obj, realize["prop"], realize["value"])
    if holder is not None:
        return None
    cell = view.entity_cell(obj)
    if cell is None:
        return _fetch(view, agent_id, obj, state)  # explore hints
    if reachable_from(view, agent_id, cell):
        return Action.state_op(obj, realize["prop"], realize["value"])
    return next_move(view, agent_id, approach_cells(view, agent_id, cell))


def _goto(view, agent_id: str, realize: dict) -> Optional[Action]:
    dest = realize.get("to")
    if isinstance(dest, (list, tuple)):
        targets = [tuple(dest)]
    elif isinstance(dest, str):
        targets = view.workspace_cells(dest) or view.room_cells(dest)
    else:
        return None
    me = view.agent_cells()[agent_id]
    if me in set(map(tuple, targets)):
        return None
    return next_move(view, agent_id, targets)
