"""Situation assessment: world (+ short history) -> symbolic fact base.

Facts are subject/predicate/object triples ("BOB isIn KITCHEN",
"MUG isFull TRUE"). Spatial predicates follow fixed decidable rules over
the grid; motion facts need three history worlds. Pure and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .world import (
    World,
    angle_between,
    can_reach,
    can_see,
    chebyshev,
    POINT_PERSIST_TICKS,
)

IS_IN = "isIn"
IS_ON = "isOn"
IS_NEXT_TO = "isNextTo"
IS_HOLDING = "isHolding"
CAN_SEE = "canSee"
CAN_REACH = "canReach"
IS_LOOKING_AT = "isLookingAt"
IS_POINTING_AT = "isPointingAt"
IS_MOVING_TOWARD = "isMovingToward"

# Single-valued per subject; inserting a new value replaces the old one.
FUNCTIONAL_PREDICATES = frozenset({IS_IN, IS_ON, IS_HOLDING, IS_LOOKING_AT, IS_POINTING_AT})

# Copied into belief bases by perceptual filtering; everything else is
# recomputed per perspective, never believed directly.
OBSERVABLE_PREDICATES = frozenset({IS_IN, IS_ON, IS_HOLDING})

CORE_PREDICATES = frozenset({
    IS_IN, IS_ON, IS_NEXT_TO, IS_HOLDING, CAN_SEE, CAN_REACH,
    IS_LOOKING_AT, IS_POINTING_AT, IS_MOVING_TOWARD,
})

LOOK_CONE_DEG = 22.5
MOTION_WINDOW = 3


def value_str(v) -> str:
    if v is True:
        return "TRUE"
    if v is False:
        return "FALSE"
    return str(v)


@dataclass(frozen=True)
class Fact:
    """One triple; `tick` records derivation time and is ignored by equality."""

    subject: str
    predicate: str
    obj: object
    tick: int = field(default=0, compare=False)

    @property
    def key(self) -> tuple:
        """Functional key: (subject, predicate)."""
        return (self.subject, self.predicate)

    @property
    def triple(self) -> tuple:
        return (self.subject, self.predicate, self.obj)

    def __str__(self) -> str:
        return f"{self.subject} {self.predicate} {value_str(self.obj)}"


def is_functional(predicate: str, prop_names: Iterable[str] = ()) -> bool:
    return predicate in FUNCTIONAL_PREDICATES or predicate in set(prop_names)


def is_observable(predicate: str, prop_names: Iterable[str] = ()) -> bool:
    return predicate in OBSERVABLE_PREDICATES or predicate in set(prop_names)


@dataclass(frozen=True)
class FactBase:
    facts: frozenset
    tick: int

    def __contains__(self, fact: Fact) -> bool:
        return fact in self.facts

    def __iter__(self):
        return iter(sorted(self.facts, key=lambda f: (f.subject, f.predicate, str(f.obj))))

    def __len__(self) -> int:
        return len(self.facts)

    def holds(self, subject: str, predicate: str, obj) -> bool:
        return Fact(subject, predicate, obj) in self.facts

    def value_of(self, subject: str, predicate: str):
        """Object of a functional fact, or None."""
        for f in self.facts:
            if f.subject == subject and f.predicate == predicate:
                return f.obj
        return None

    def objects_of(self, subject: str, predicate: str) -> set:
        return {f.obj for f in self.facts
                if f.subject == subject and f.predicate == predicate}

    def strings(self) -> list:
        return [str(f) for f in self]


def _placed_entities(world: World) -> list:
    """(id, effective cell, held) for every entity; held objects use holder cell."""
    out = []
    for aid in sorted(world.agents):
        out.append((aid, world.agents[aid].cell, False))
    for oid in sorted(world.objects):
        obj = world.objects[oid]
        out.append((oid, world.entity_cell(oid), obj.held_by is not None))
    return out


def assess(world: World, history: Iterable[World] = ()) -> FactBase:
    """Derive the complete fact base for the current world.

    `history` holds previous worlds oldest-to-newest (current world
    excluded); motion facts are emitted only with >= 3 of them.
    """
    history = list(history)
    t = world.tick
    facts = set()
    entities = _placed_entities(world)

    for oid in sorted(world.objects):
        obj = world.objects[oid]
        if obj.held_by is None:
            room = world.room_of(obj.cell)
            if room is not None:
                facts.add(Fact(oid, IS_IN, room, t))
            if obj.on_surface:
                ws = world.cell_at(obj.cell).workspace
                if ws is not None:
                    facts.add(Fact(oid, IS_ON, ws, t))
        for prop in sorted(obj.props):
            facts.add(Fact(oid, prop, obj.props[prop], t))

    for eid, cell, held in entities:
        if held:
            continue
        for oid2, cell2, held2 in entities:
            if held2 or oid2 == eid:
                continue
            if chebyshev(cell, cell2) <= 1:
                facts.add(Fact(eid, IS_NEXT_TO, oid2, t))

    for aid in sorted(world.agents):
        ag = world.agents[aid]
        facts.add(Fact(aid, IS_IN, world.room_of(ag.cell), t))
        if ag.holding is not None:
            facts.add(Fact(aid, IS_HOLDING, ag.holding, t))

        visible = []
        for eid, cell, _held in entities:
            if eid == aid:
                continue
            if can_see(world, ag, cell):
                facts.add(Fact(aid, CAN_SEE, eid, t))
                visible.append((eid, cell))
            if can_reach(world, ag, cell):
                facts.add(Fact(aid, CAN_REACH, eid, t))

        looked = None
        best = None
        for eid, cell in visible:
            if angle_between(ag.heading, ag.cell, cell) > LOOK_CONE_DEG + 1e-9:
                continue
            d = (cell[0] - ag.cell[0]) ** 2 + (cell[1] - ag.cell[1]) ** 2
            rank = (d, eid)
            if best is None or rank < best:
                best, looked = rank, eid
        if looked is not None:
            facts.add(Fact(aid, IS_LOOKING_AT, looked, t))

        if ag.pointing_at is not None and world.has_entity(ag.pointing_at) \
                and t - ag.pointing_tick <= POINT_PERSIST_TICKS:
            facts.add(Fact(aid, IS_POINTING_AT, ag.pointing_at, t))

        if len(history) >= MOTION_WINDOW:
            window = history[-MOTION_WINDOW:] + [world]
            for eid, _cell, _held in entities:
                if eid == aid:
                    continue
                dists = []
                ok = True
                for w in window:
                    if aid not in w.agents or not w.has_entity(eid):
                        ok = False
                        break
                    dists.append(chebyshev(w.agents[aid].cell, w.entity_cell(eid)))
                if not ok:
                    continue
                non_increasing = all(dists[i] >= dists[i + 1] for i in range(len(dists) - 1))
                if non_increasing and dists[0] - dists[-1] >= 1:
                    facts.add(Fact(aid, IS_MOVING_TOWARD, eid, t))

    return FactBase(frozenset(facts), t)


def diff(before: FactBase, after: FactBase) -> tuple:
    """(added, removed) fact sets, ignoring derivation ticks."""
    added = after.facts - before.facts
    removed = before.facts - after.facts
    return added, removed
