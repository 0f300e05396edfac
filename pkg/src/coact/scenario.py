"""Scenario documents: JSON -> world, domain, goals, human policies.

Top-level keys: grid, entities, goals, domain, humans, seed. The grid is
a list of row strings ('#' blocking, '.' free, letters are room codes
mapped in the legend); workspaces name surface cells. Parse errors carry
the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .htn import HtnDomain, MethodDef, OperatorDef, SocialPolicy, SubtaskRef, TaskDef
from .humans import PolicyConfig
from .mental import KnowledgeModel
from .world import Cell, DIRECTIONS, AgentState, ObjState, World


class ScenarioError(ValueError):
    pass


@dataclass
class GoalSpec:
    goal_id: str
    task: str
    args: tuple = ()
    tick_budget: int = 300


@dataclass
class IntentionSpec:
    """One candidate goal for the recognizer: reach-and-grab a target whose
    cell depends on which room the human believes it is in."""
    goal_id: str
    agent: str
    target: str
    spots: dict  # room -> cell
    reach: int = 1
    task: Optional[str] = None  # htn task adopted on recognition
    feasible: bool = True


@dataclass
class IntentionConfig:
    goals: list  # [IntentionSpec]
    beta: float = 5.0
    theta: float = 0.8
    context: str = "default"
    priors: dict = field(default_factory=dict)  # context -> {goal|none: p}
    step_cost: float = 0.04
    discount: float = 0.95


@dataclass
class Scenario:
    name: str
    world: World
    robot_id: str
    goals: list  # [GoalSpec]
    domain: Optional[HtnDomain]
    policy: SocialPolicy
    knowledge: KnowledgeModel
    humans: dict  # agent id -> PolicyConfig
    initial_beliefs: dict  # agent id -> [fact triples]
    intentions: Optional[IntentionConfig]
    seed: int
    raw: dict

    def agent_kinds(self) -> dict:
        return {aid: a.kind for aid, a in self.world.agents.items()}


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ScenarioError(f"{where}: missing field '{key}'")
    return data[key]


def _parse_grid(gdata: dict) -> tuple:
    rows = _require(gdata, "rows", "grid")
    legend = gdata.get("legend", {})
    default_room = legend.get(".", "ROOM")
    height = len(rows)
    width = len(rows[0]) if rows else 0
    ws_by_cell = {}
    for label, cells in gdata.get("workspaces", {}).items():
        for c in cells:
            ws_by_cell[tuple(c)] = label
    surfaces = {tuple(c) for c in gdata.get("surfaces", [])}
    surfaces |= set(ws_by_cell)  # workspace cells are surfaces

    cells = []
    for y, row in enumerate(rows):
        if len(row) != width:
            raise ScenarioError(f"grid: row {y} length {len(row)} != {width}")
        line = []
        for x, ch in enumerate(row):
            if ch == "#":
                line.append(Cell(blocking=True, room="#"))
                continue
            room = default_room if ch == "." else legend.get(ch)
            if room is None:
                raise ScenarioError(f"grid: row {y} col {x}: no legend entry for '{ch}'")
            line.append(Cell(blocking=False, room=room,
                             workspace=ws_by_cell.get((x, y)),
                             surface=(x, y) in surfaces))
        cells.append(line)
    return width, height, cells


def _parse_entities(entities: list, world: World) -> None:
    for ent in entities:
        eid = _require(ent, "id", "entities")
        if world.has_entity(eid):
            raise ScenarioError(f"entities: duplicate id '{eid}'")
        pos = tuple(_require(ent, "pos", f"entity {eid}"))
        if world.blocking(pos):
            raise ScenarioError(f"entity {eid}: cell {pos} is blocking or out of bounds")
        kind = ent.get("kind")
        if kind in ("robot", "human"):
            heading = ent.get("heading", "N")
            if heading not in DIRECTIONS:
                raise ScenarioError(f"entity {eid}: bad heading '{heading}'")
            world.agents[eid] = AgentState(
                id=eid, kind=kind, cell=pos, heading=heading,
                reach_radius=ent.get("reach", 1),
                view_range=ent.get("viewRange", 6),
                view_half_angle=ent.get("viewHalfAngle", 60.0),
            )
        else:
            world.objects[eid] = ObjState(
                id=eid, type_label=ent.get("type", "object"), cell=pos,
                on_surface=world.cell_at(pos).surface,
                props=dict(ent.get("props", {})),
            )


def _parse_htn(data: dict) -> HtnDomain:
    tasks = {}
    for name, td in data.get("tasks", {}).items():
        tasks[name] = TaskDef(
            name=name,
            params=tuple(td.get("params", ())),
            achieved=tuple(tuple(p) for p in td.get("achieved", ())),
        )
    operators = {}
    for name, od in data.get("operators", {}).items():
        operators[name] = OperatorDef(
            name=name,
            params=tuple(od.get("params", ())),
            agent_kinds=tuple(od.get("agents", ("robot", "human"))),
            pre=tuple(tuple(p) for p in od.get("pre", ())),
            add=tuple(tuple(p) for p in od.get("add", ())),
            delete=tuple(tuple(p) for p in od.get("del", ())),
            cost=dict(od.get("cost", {"robot": 1.0, "human": 1.0})),
            realize=dict(od.get("realize", {})),
            duration_bound=od.get("durationBound", 30),
        )
    methods: dict = {}
    for md in data.get("methods", []):
        task = _require(md, "task", "methods")
        subtasks = []
        for st in md.get("subtasks", []):
            subtasks.append(SubtaskRef(
                name=_require(st, "name", f"method for {task}"),
                args=tuple(st.get("args", ())),
                agent=st.get("agent"),
            ))
        methods.setdefault(task, []).append(MethodDef(
            task=task,
            name=md.get("name", f"m{len(methods.get(task, []))}"),
            condition=tuple(tuple(p) for p in md.get("condition", ())),
            subtasks=tuple(subtasks),
            ordering=tuple(tuple(p) for p in md.get("ordering", ())),
        ))
    for name in tasks:
        if name not in methods and not tasks[name].achieved:
            raise ScenarioError(f"htn: abstract task '{name}' has no methods")
    return HtnDomain(tasks=tasks, methods=methods, operators=operators)


def _parse_intentions(data: dict) -> IntentionConfig:
    goals = []
    for g in data.get("goals", []):
        goals.append(IntentionSpec(
            goal_id=_require(g, "id", "intentions.goals"),
            agent=_require(g, "agent", "intentions.goals"),
            target=_require(g, "target", "intentions.goals"),
            spots={room: tuple(cell) for room, cell in g.get("spots", {}).items()},
            reach=g.get("reach", 1),
            task=g.get("task"),
            feasible=g.get("feasible", True),
        ))
    priors = data.get("priors")
    if not priors:
        ids = [g.goal_id for g in goals]
        p = 1.0 / (len(ids) + 1)
        priors = {"default": {**{g: p for g in ids}, "none": p}}
    return IntentionConfig(
        goals=goals,
        beta=data.get("beta", 5.0),
        theta=data.get("theta", 0.8),
        context=data.get("context", "default"),
        priors=priors,
        step_cost=data.get("stepCost", 0.04),
        discount=data.get("discount", 0.95),
    )


def load_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse a scenario document; raises ScenarioError with the offending
    field on malformed input."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"not valid JSON: line {exc.lineno}: {exc.msg}")

    width, height, cells = _parse_grid(_require(data, "grid", "document"))
    prop_domains = {}
    for pname, domain in data.get("props", {}).items():
        prop_domains[pname] = tuple(domain)
    world = World(width=width, height=height, cells=cells, agents={}, objects={},
                  tick=0, prop_domains=prop_domains)
    _parse_entities(_require(data, "entities", "document"), world)

    robot_ids = sorted(a for a, st in world.agents.items() if st.kind == "robot")
    if not robot_ids:
        raise ScenarioError("entities: no robot agent declared")
    world.check_invariants()

    # undeclared props seen on objects get boolean domains
    for obj in world.objects.values():
        for pname, value in obj.props.items():
            if pname not in world.prop_domains:
                world.prop_domains[pname] = (True, False) if isinstance(value, bool) \
                    else (value,)

    goals = []
    for i, g in enumerate(data.get("goals", [])):
        goals.append(GoalSpec(
            goal_id=g.get("id", f"goal{i + 1}"),
            task=_require(g, "task", "goals"),
            args=tuple(g.get("args", ())),
            tick_budget=g.get("tickBudget", 300),
        ))

    domain_data = data.get("domain", {})
    htn = _parse_htn(domain_data["htn"]) if "htn" in domain_data else None
    intentions = _parse_intentions(domain_data["intentions"]) \
        if "intentions" in domain_data else None

    policy_data = domain_data.get("policy", {})
    policy = SocialPolicy(
        mode=policy_data.get("mode", "EFFICIENT"),
        lam=policy_data.get("lambda", 0.5),
        mu=policy_data.get("mu", 1.0),
    )

    seed = data.get("seed", 0)
    humans = {}
    initial_beliefs = {}
    knowledge = KnowledgeModel()
    for aid, hdata in data.get("humans", {}).items():
        if aid not in world.agents or world.agents[aid].kind != "human":
            raise ScenarioError(f"humans: '{aid}' is not a declared human agent")
        cfg = PolicyConfig.from_wire({**hdata, "seed": hdata.get("seed", seed)})
        humans[aid] = cfg
        if cfg.view_range is not None:
            world.agents[aid].view_range = cfg.view_range
        for task in cfg.unknown_tasks:
            knowledge.unknown.add((aid, task))
        initial_beliefs[aid] = [tuple(f) for f in hdata.get("initialBeliefs", [])]
    for aid, st in world.agents.items():
        if st.kind == "human" and aid not in humans:
            humans[aid] = PolicyConfig(seed=seed)
            initial_beliefs[aid] = []

    return Scenario(
        name=data.get("name", name),
        world=world,
        robot_id=robot_ids[0],
        goals=goals,
        domain=htn,
        policy=policy,
        knowledge=knowledge,
        humans=humans,
        initial_beliefs=initial_beliefs,
        intentions=intentions,
        seed=seed,
        raw=data,
    )


def load_scenario_file(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    name = str(path).rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return load_scenario(text, name=name)


def apply_overrides(raw: dict, seed: Optional[int] = None,
                    human_kind: Optional[str] = None,
                    policy_mode: Optional[str] = None) -> dict:
    """CLI overrides produce a new raw document; reload after this."""
    out = json.loads(json.dumps(raw))
    if seed is not None:
        out["seed"] = seed
        for hdata in out.get("humans", {}).values():
            hdata["seed"] = seed
    if human_kind is not None:
        for hdata in out.get("humans", {}).values():
            hdata["kind"] = human_kind
    if policy_mode is not None:
        out.setdefault("domain", {}).setdefault("policy", {})["mode"] = \
            policy_mode.upper()
    return out
