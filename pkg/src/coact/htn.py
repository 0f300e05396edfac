"""Hierarchical task-network planner with agent assignment and social costs.

Plans are found by depth-first decomposition with branch-and-bound:
methods are tried in declared order, eligible agents in id order, so ties
on cost resolve deterministically to the first plan found. The returned
plan carries causal links and a partial order (causal + threat + declared
edges) derived from the linear search trace.

Cost of a complete plan:

    sum(base costs) + lam * |C_robot - C_human| + sign * mu * u

where u counts human-assigned steps whose operator the human does not
know; sign is +1 in EFFICIENT mode (avoid burdening the human with
unfamiliar tasks), -1 in TEACH mode (seek them out), 0 in BALANCED.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .mental import KnowledgeModel, UNKNOWN

EFFICIENT = "EFFICIENT"
TEACH = "TEACH"
BALANCED = "BALANCED"

DEFAULT_DEPTH_BOUND = 50

OK = "ok"
VIOLATED = "violated"

ACCEPTED = "accepted"
REPLANNED = "replanned"
INFEASIBLE = "infeasible"


class PlanningError(Exception):
    pass


class Infeasible(PlanningError):
    def __init__(self, message: str, violated_constraints: tuple = ()):
        super().__init__(message)
        self.violated_constraints = violated_constraints


class DepthBoundExceeded(PlanningError):
    pass


# -- domain model -----------------------------------------------------------


@dataclass(frozen=True)
class OperatorDef:
    name: str
    params: tuple
    agent_kinds: tuple  # kinds allowed to perform this operator
    pre: tuple  # fact patterns, (subj, pred, obj) with ?vars
    add: tuple
    delete: tuple
    cost: dict  # agent kind -> base cost
    realize: dict = field(default_factory=dict)
    duration_bound: int = 30  # ticks the executive budgets for one instance


@dataclass(frozen=True)
class MethodDef:
    task: str
    name: str
    condition: tuple  # fact patterns that must hold to apply
    subtasks: tuple  # SubtaskRef
    ordering: tuple = ()  # (i, j) pairs among subtasks


@dataclass(frozen=True)
class SubtaskRef:
    name: str
    args: tuple
    agent: Optional[str] = None  # agent id, kind, "?any", or None for abstract


@dataclass(frozen=True)
class TaskDef:
    name: str
    params: tuple
    achieved: tuple = ()  # already-true condition: decomposes to nothing


@dataclass
class HtnDomain:
    tasks: dict  # name -> TaskDef
    methods: dict  # task name -> [MethodDef] in declared order
    operators: dict  # name -> OperatorDef

    def is_operator(self, name: str) -> bool:
        return name in self.operators


@dataclass(frozen=True)
class SocialPolicy:
    mode: str = EFFICIENT
    lam: float = 0.5
    mu: float = 1.0

    def __post_init__(self):
        if self.mode not in (EFFICIENT, TEACH, BALANCED):
            raise ValueError(f"unknown mode {self.mode}")
        if self.lam < 0 or self.mu < 0:
            raise ValueError("weights must be >= 0")

    @property
    def unknown_sign(self) -> float:
        return {EFFICIENT: 1.0, TEACH: -1.0, BALANCED: 0.0}[self.mode]


@dataclass(frozen=True)
class NegotiationConstraints:
    must_do: frozenset = frozenset()  # {(agent_id, pattern)}
    must_not_do: frozenset = frozenset()

    def __post_init__(self):
        overlap = {(a, p) for a, p in self.must_do} & {(a, p) for a, p in self.must_not_do}
        if overlap:
            raise Infeasible(
                f"contradictory constraints: {sorted(overlap)}",
                violated_constraints=tuple(sorted(overlap)),
            )

    def merged(self, other: "NegotiationConstraints") -> "NegotiationConstraints":
        return NegotiationConstraints(
            self.must_do | other.must_do,
            self.must_not_do | other.must_not_do,
        )

    @staticmethod
    def from_wire(data: dict) -> "NegotiationConstraints":
        return NegotiationConstraints(
            frozenset((a, p) for a, p in data.get("mustDo", [])),
            frozenset((a, p) for a, p in data.get("mustNotDo", [])),
        )

    def to_wire(self) -> dict:
        return {"mustDo": sorted(list(t) for t in self.must_do),
                "mustNotDo": sorted(list(t) for t in self.must_not_do)}


def parse_pattern(pattern: str) -> tuple:
    """'fetch(MUG)' -> ('fetch', ('MUG',)); 'fetch' / 'fetch(*)' / '*' wildcard."""
    pattern = pattern.strip()
    if "(" not in pattern:
        return (pattern, None)
    name, rest = pattern.split("(", 1)
    args = tuple(a.strip() for a in rest.rstrip(")").split(",") if a.strip())
    return (name.strip(), args)


def pattern_matches(pattern: str, task_name: str, args: tuple) -> bool:
    pname, pargs = parse_pattern(pattern)
    if pname != "*" and pname != task_name:
        return False
    if pargs is None or pargs == ("*",):
        return True
    if len(pargs) != len(args):
        return False
    return all(pa == "*" or pa == str(a) for pa, a in zip(pargs, args))


# -- plans ------------------------------------------------------------------


@dataclass(frozen=True)
class PlanStep:
    step_id: str
    op: str
    args: tuple
    agent: str
    preconds: tuple  # ground (subj, pred, obj)
    add: tuple
    delete: tuple
    base_cost: float
    lineage: tuple  # ancestor task instances, outermost first: ("fetch(MUG)", ...)
    realize: dict = field(default_factory=dict)
    duration_bound: int = 30

    @property
    def label(self) -> str:
        return f"{self.op}({', '.join(str(a) for a in self.args)})"

    def matches(self, pattern: str) -> bool:
        if pattern_matches(pattern, self.op, self.args):
            return True
        for inst in self.lineage:
            name, args = inst
            if pattern_matches(pattern, name, args):
                return True
        return False

    def to_wire(self) -> dict:
        return {
            "stepId": self.step_id,
            "op": self.op,
            "args": [str(a) for a in self.args],
            "agent": self.agent,
            "label": self.label,
        }


@dataclass(frozen=True)
class SharedPlan:
    plan_id: str
    steps: tuple  # PlanStep, in search (one valid linearization) order
    ordering: frozenset  # (earlier_step_id, later_step_id) edges
    causal_links: tuple  # (producer_step_id | "init", consumer_step_id, fact)
    cost: float

    def step(self, step_id: str) -> PlanStep:
        for s in self.steps:
            if s.step_id == step_id:
                return s
        raise KeyError(step_id)

    def predecessors(self, step_id: str) -> set:
        return {a for a, b in self.ordering if b == step_id}

    def human_steps(self, agents: dict) -> list:
        return [s for s in self.steps if agents.get(s.agent) == "human"]

    def summaries(self) -> dict:
        """Goal-level task summary used in plan proposals: one entry per
        highest-level task below the goal, plus the step list."""
        tasks = []
        seen = set()
        for s in self.steps:
            inst = s.lineage[1] if len(s.lineage) > 1 else (s.op, s.args)
            label = f"{inst[0]}({', '.join(str(a) for a in inst[1])})"
            if label not in seen:
                seen.add(label)
                tasks.append({"task": label, "agents": sorted({
                    t.agent for t in self.steps
                    if (t.lineage[1] if len(t.lineage) > 1 else (t.op, t.args)) == inst})})
        return {"tasks": tasks, "steps": [s.to_wire() for s in self.steps]}

    def to_wire(self) -> dict:
        return {
            "planId": self.plan_id,
            "steps": [s.to_wire() for s in self.steps],
            "ordering": sorted([a, b] for a, b in self.ordering),
            "cost": self.cost,
        }


# -- grounding helpers --------------------------------------------------------


def _subst(term, binding: dict):
    if isinstance(term, str) and term.startswith("?"):
        if term not in binding:
            raise PlanningError(f"unbound variable {term}")
        return binding[term]
    return term


def ground_pattern(pattern: tuple, binding: dict) -> tuple:
    return tuple(_subst(t, binding) for t in pattern)


def _holds(facts: frozenset, pattern: tuple) -> bool:
    return tuple(pattern) in facts


def condition_holds(facts: frozenset, patterns: Iterable[tuple], binding: dict) -> bool:
    return all(_holds(facts, ground_pattern(p, binding)) for p in patterns)


# -- the planner --------------------------------------------------------------


@dataclass
class _Node:
    """One agenda entry: a task or operator instance awaiting treatment."""
    name: str
    args: tuple
    agent: Optional[str]
    lineage: tuple
    groups: tuple  # ((method_instance_id, subtask_index), ...)


@dataclass
class _Best:
    plan: Optional[list] = None  # list of (step fields) tuples
    cost: float = float("inf")


def _min_op_cost(op: OperatorDef) -> float:
    return min(op.cost.values()) if op.cost else 0.0


def _min_task_costs(domain: HtnDomain) -> dict:
    """Admissible per-task lower bounds on base cost (0 on recursion)."""
    memo: dict = {}

    def rec(name: str, active: frozenset) -> float:
        if name in memo:
            return memo[name]
        if domain.is_operator(name):
            memo[name] = _min_op_cost(domain.operators[name])
            return memo[name]
        if name in active:
            return 0.0
        task = domain.tasks.get(name)
        if task is not None and task.achieved:
            # may decompose to nothing when already satisfied
            memo[name] = 0.0
            return 0.0
        best = 0.0
        methods = domain.methods.get(name, [])
        if methods:
            best = min(
                sum(rec(st.name, active | {name}) for st in m.subtasks)
                for m in methods
            )
        memo[name] = best
        return best

    for name in list(domain.tasks) + list(domain.operators):
        rec(name, frozenset())
    return memo


def plan(domain: HtnDomain, initial_facts: Iterable[tuple], goal_task: str,
         goal_args: tuple, knowledge: KnowledgeModel, policy: SocialPolicy,
         constraints: NegotiationConstraints, agents: dict,
         depth_bound: int = DEFAULT_DEPTH_BOUND, plan_id: str = "plan-1") -> SharedPlan:
    """Minimum-social-cost agent-assigned plan for one goal task.

    `agents` maps agent id -> kind ("robot"/"human"). Raises Infeasible when
    no decomposition satisfies preconditions and constraints, and
    DepthBoundExceeded when the only open branches ran past the bound.
    """
    if goal_task not in domain.tasks and not domain.is_operator(goal_task):
        raise PlanningError(f"undeclared goal task {goal_task}")
    facts0 = frozenset(tuple(f) for f in initial_facts)
    min_costs = _min_task_costs(domain)
    agent_ids = sorted(agents)
    best = _Best()
    bound_hit = [False]
    counter = itertools.count(1)

    def eligible_agents(op: OperatorDef, declared: Optional[str]) -> list:
        if declared is None or declared == "?any":
            pool = [a for a in agent_ids if agents[a] in op.agent_kinds]
        elif declared in agents:
            pool = [declared] if agents[declared] in op.agent_kinds else []
        else:  # a kind name
            pool = [a for a in agent_ids if agents[a] == declared and agents[a] in op.agent_kinds]
        return pool

    def allowed(agent: str, op: str, args: tuple, lineage: tuple) -> bool:
        for a, pat in constraints.must_not_do:
            if a != agent:
                continue
            if pattern_matches(pat, op, args):
                return False
            if any(pattern_matches(pat, n, ar) for n, ar in lineage):
                return False
        return True

    def social_cost(steps: list) -> float:
        effort = {"robot": 0.0, "human": 0.0}
        unknown = 0
        for st in steps:
            kind = agents[st["agent"]]
            effort[kind] = effort.get(kind, 0.0) + st["base_cost"]
            if kind == "human" and knowledge.knows_task(st["agent"], st["op"]) == UNKNOWN:
                unknown += 1
        base = sum(st["base_cost"] for st in steps)
        return base + policy.lam * abs(effort["robot"] - effort["human"]) \
            + policy.unknown_sign * policy.mu * unknown

    def lower_bound(steps: list, agenda: list) -> float:
        base = sum(st["base_cost"] for st in steps)
        remaining = sum(min_costs.get(n.name, 0.0) for n in agenda)
        social = 0.0
        if policy.unknown_sign < 0:
            # TEACH can only subtract; bound by every remaining step being
            # an unknown human step plus those already placed.
            u_now = sum(1 for st in steps if agents[st["agent"]] == "human")
            social = -policy.mu * (u_now + depth_bound)
        return base + remaining + social

    def must_do_satisfied(steps: list) -> bool:
        for a, pat in constraints.must_do:
            hit = False
            for st in steps:
                if st["agent"] != a:
                    continue
                if pattern_matches(pat, st["op"], st["args"]) or \
                        any(pattern_matches(pat, n, ar) for n, ar in st["lineage"]):
                    hit = True
                    break
            if not hit:
                return False
        return True

    def search(agenda: list, facts: frozenset, steps: list, depth: int) -> None:
        if depth > depth_bound:
            bound_hit[0] = True
            return
        if lower_bound(steps, agenda) >= best.cost:
            return
        if not agenda:
            if not must_do_satisfied(steps):
                return
            cost = social_cost(steps)
            if cost < best.cost:
                best.cost = cost
                best.plan = [dict(st) for st in steps]
            return

        node = agenda[0]
        rest = agenda[1:]

        if domain.is_operator(node.name):
            op = domain.operators[node.name]
            binding = {f"?{p}": a for p, a in zip(op.params, node.args)}
            for agent in eligible_agents(op, node.agent):
                if not allowed(agent, node.name, node.args, node.lineage):
                    continue
                binding["?agent"] = agent
                realize = {k: (_subst(v, binding) if isinstance(v, str) else v)
                           for k, v in op.realize.items()}
                # a step that hands something to X needs X's participation
                partner = realize.get("to")
                if isinstance(partner, str) and partner in agents and any(
                        a == partner and pat == "*"
                        for a, pat in constraints.must_not_do):
                    continue
                pre = tuple(ground_pattern(p, binding) for p in op.pre)
                if not all(_holds(facts, p) for p in pre):
                    continue
                adds = tuple(ground_pattern(p, binding) for p in op.add)
                dels = tuple(ground_pattern(p, binding) for p in op.delete)
                new_facts = frozenset((facts - set(dels)) | set(adds))
                steps.append({
                    "op": node.name, "args": node.args, "agent": agent,
                    "pre": pre, "add": adds, "delete": dels,
                    "base_cost": op.cost.get(agents[agent], 0.0),
                    "lineage": node.lineage, "groups": node.groups,
                    "realize": realize, "duration_bound": op.duration_bound,
                })
                search(rest, new_facts, steps, depth + 1)
                steps.pop()
            return

        task = domain.tasks.get(node.name)
        if task is None:
            raise PlanningError(f"task {node.name} is neither operator nor declared task")
        binding = {f"?{p}": a for p, a in zip(task.params, node.args)}
        if task.achieved and condition_holds(facts, task.achieved, binding):
            search(rest, facts, steps, depth + 1)
            return
        methods = domain.methods.get(node.name, [])
        if not methods:
            raise PlanningError(f"abstract task {node.name} has no methods")
        for method in methods:
            if not condition_holds(facts, method.condition, binding):
                continue
            inst_id = next(counter)
            method_orderings[inst_id] = tuple(method.ordering)
            children = []
            for idx, st in enumerate(method.subtasks):
                args = tuple(_subst(a, binding) for a in st.args)
                agent = st.agent
                if isinstance(agent, str) and agent.startswith("?") and agent != "?any":
                    agent = binding.get(agent, agent)
                children.append(_Node(
                    st.name, args, agent,
                    node.lineage + ((node.name, node.args),),
                    node.groups + ((inst_id, idx),),
                ))
            search(children + rest, facts, steps, depth + 1)
        return

    method_orderings: dict = {}
    root = _Node(goal_task, tuple(goal_args), None, (), ())
    search([root], facts0, [], 0)

    if best.plan is None:
        if bound_hit[0]:
            raise DepthBoundExceeded(f"no plan within {depth_bound} decompositions")
        raise Infeasible(f"no decomposition achieves {goal_task}{tuple(goal_args)}")

    return _assemble(best.plan, best.cost, facts0, method_orderings, plan_id)


def _assemble(raw_steps: list, cost: float, facts0: frozenset,
              method_orderings: dict, plan_id: str) -> SharedPlan:
    """Turn the linear search trace into a partially ordered SharedPlan.

    Ordering edges = causal links + threat-resolution edges consistent
    with the search order + method-declared subtask orderings. Everything
    not forced stays unordered (deordering).
    """
    steps = []
    for i, st in enumerate(raw_steps):
        steps.append(PlanStep(
            step_id=f"s{i + 1}",
            op=st["op"], args=tuple(st["args"]), agent=st["agent"],
            preconds=st["pre"], add=st["add"], delete=st["delete"],
            base_cost=st["base_cost"], lineage=tuple(st["lineage"]),
            realize=dict(st["realize"]), duration_bound=st["duration_bound"],
        ))

    edges = set()
    links = []
    for i, s in enumerate(steps):
        for f in s.preconds:
            producer = None
            for j in range(i - 1, -1, -1):
                if f in steps[j].add:
                    producer = j
                    break
                if f in steps[j].delete:
                    break
            if producer is not None:
                links.append((steps[producer].step_id, s.step_id, f))
                edges.add((steps[producer].step_id, s.step_id))
            else:
                links.append(("init", s.step_id, f))
            for k, other in enumerate(steps):
                if k == i or (producer is not None and k == producer):
                    continue
                if f in other.delete:
                    if producer is not None and k < producer:
                        edges.add((other.step_id, steps[producer].step_id))
                    elif k > i:
                        edges.add((s.step_id, other.step_id))

    group_members: dict = {}
    for s, raw in zip(steps, raw_steps):
        for inst, idx in raw["groups"]:
            group_members.setdefault(inst, {}).setdefault(idx, []).append(s.step_id)
    for inst, pairs in method_orderings.items():
        slots = group_members.get(inst)
        if not slots:
            continue
        for i, j in pairs:
            for a in slots.get(i, []):
                for b in slots.get(j, []):
                    edges.add((a, b))

    return SharedPlan(plan_id, tuple(steps), frozenset(edges), tuple(links), cost)


# -- validation ---------------------------------------------------------------


def _closure(step_ids: list, edges: frozenset) -> dict:
    """before[a] = set of steps necessarily after a (reachability)."""
    after = {s: set() for s in step_ids}
    adj = {s: set() for s in step_ids}
    for a, b in edges:
        if a in adj and b in after:
            adj[a].add(b)
    for s in step_ids:
        stack = list(adj[s])
        seen = set()
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            stack.extend(adj[x])
        after[s] = seen
    return after


def validate(plan_obj: SharedPlan, facts: Iterable[tuple],
             skip_preconds: Iterable[str] = ()) -> tuple:
    """("ok", None) iff every linearization of the partial order executes
    from `facts` with all preconditions satisfied; otherwise
    ("violated", (step_id, fact)) for the first violated step in
    topological (step id) order. Modal-truth-criterion style check.
    Steps in `skip_preconds` (already mid-execution, preconditions
    legitimately consumed) are kept as producers but not checked."""
    facts = frozenset(tuple(f) for f in facts)
    skip = set(skip_preconds)
    steps = list(plan_obj.steps)
    ids = [s.step_id for s in steps]
    after = _closure(ids, plan_obj.ordering)

    def necessarily_before(a: str, b: str) -> bool:
        return b in after.get(a, set())

    for s in steps:
        if s.step_id in skip:
            continue
        for f in s.preconds:
            producers = []
            if f in facts:
                producers.append("init")
            for p in steps:
                if p.step_id != s.step_id and f in p.add and \
                        necessarily_before(p.step_id, s.step_id):
                    producers.append(p.step_id)
            supported = False
            for prod in producers:
                safe = True
                for d in steps:
                    if d.step_id == s.step_id or d.step_id == prod:
                        continue
                    if f not in d.delete:
                        continue
                    if prod != "init" and necessarily_before(d.step_id, prod):
                        continue
                    if necessarily_before(s.step_id, d.step_id):
                        continue
                    safe = False
                    break
                if safe:
                    supported = True
                    break
            if not supported:
                return (VIOLATED, (s.step_id, f))
    return (OK, None)


# -- negotiation ---------------------------------------------------------------


@dataclass
class NegotiationResult:
    status: str  # accepted | replanned | infeasible
    plan: Optional[SharedPlan] = None
    report: Optional[str] = None
    violated: tuple = ()


class PlanNegotiation:
    """One goal episode: owns accumulated constraints across reject rounds."""

    def __init__(self, domain: HtnDomain, initial_facts, goal_task: str,
                 goal_args: tuple, knowledge: KnowledgeModel,
                 policy: SocialPolicy, agents: dict,
                 constraints: Optional[NegotiationConstraints] = None,
                 depth_bound: int = DEFAULT_DEPTH_BOUND):
        self.domain = domain
        self.initial_facts = [tuple(f) for f in initial_facts]
        self.goal_task = goal_task
        self.goal_args = tuple(goal_args)
        self.knowledge = knowledge
        self.policy = policy
        self.agents = dict(agents)
        self.constraints = constraints or NegotiationConstraints()
        self.depth_bound = depth_bound
        self.seq = 0
        self.current: Optional[SharedPlan] = None

    def propose(self, facts=None) -> SharedPlan:
        if facts is not None:
            self.initial_facts = [tuple(f) for f in facts]
        self.seq += 1
        self.current = plan(
            self.domain, self.initial_facts, self.goal_task, self.goal_args,
            self.knowledge, self.policy, self.constraints, self.agents,
            depth_bound=self.depth_bound, plan_id=f"plan-{self.seq}",
        )
        return self.current

    def respond(self, act) -> NegotiationResult:
        from .comm import ACCEPT_PLAN, REJECT_PLAN
        if self.current is None or act.plan_id != self.current.plan_id:
            raise PlanningError(f"stale plan id {act.plan_id}")
        if act.kind == ACCEPT_PLAN:
            return NegotiationResult(ACCEPTED, self.current)
        if act.kind != REJECT_PLAN:
            raise PlanningError(f"unexpected response kind {act.kind}")
        try:
            new = NegotiationConstraints.from_wire(act.constraints)
            self.constraints = self.constraints.merged(new)
            replanned = self.propose()
        except Infeasible as exc:
            return NegotiationResult(INFEASIBLE, report=str(exc),
                                     violated=exc.violated_constraints)
        return NegotiationResult(REPLANNED, replanned)
