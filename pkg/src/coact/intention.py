"""Intention prediction: one MDP per candidate goal, Bayesian filtering.

Each goal is an MDP whose solved Q-values yield a softmax rationality
model P(action | state, goal). Observed actions update a posterior over
goals plus a `none` hypothesis with a uniform action model. Likelihoods
are evaluated at the observed human's *believed* state, not the true
one: an action can be perfectly rational in the human's head while
looking pointless in the actual world, and scoring it there is what
makes false-belief recognition work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

NONE_GOAL = "none"

DEFAULT_STEP_COST = 0.04
DEFAULT_GOAL_VALUE = 1.0
DEFAULT_DISCOUNT = 0.95
DEFAULT_BETA = 5.0
DEFAULT_THETA = 0.8

PROB_TOL = 1e-9


class UnsolvedMdpError(RuntimeError):
    pass


@dataclass
class Mdp:
    """Finite tabular MDP: unit reward on absorbing goal states, uniform
    per-step cost elsewhere."""

    states: tuple
    actions: tuple
    transitions: dict  # state -> action -> {state': prob}
    goal_states: frozenset
    step_cost: float = DEFAULT_STEP_COST
    goal_value: float = DEFAULT_GOAL_VALUE
    discount: float = DEFAULT_DISCOUNT
    q: Optional[dict] = None  # (state, action) -> value, set by value_iteration

    def __post_init__(self):
        state_set = set(self.states)
        for s in self.states:
            if s in self.goal_states:
                continue
            row = self.transitions.get(s)
            if row is None:
                raise ValueError(f"no transitions for state {s}")
            for a in self.actions:
                dist = row.get(a)
                if dist is None:
                    raise ValueError(f"no transition for ({s}, {a})")
                total = sum(dist.values())
                if abs(total - 1.0) > PROB_TOL:
                    raise ValueError(f"transition row ({s}, {a}) sums to {total}")
                for s2 in dist:
                    if s2 not in state_set:
                        raise ValueError(f"transition to unknown state {s2}")

    @property
    def solved(self) -> bool:
        return self.q is not None

    def q_row(self, state) -> dict:
        if self.q is None:
            raise UnsolvedMdpError("value_iteration has not been run")
        return {a: self.q[(state, a)] for a in self.actions}


def value_iteration(mdp: Mdp, eps: float = 1e-6, max_sweeps: int = 100000) -> dict:
    """Solve Q by synchronous Bellman backups until the residual drops
    below eps (a final full backup changes no Q entry by >= eps)."""
    if mdp.discount >= 1.0:
        raise ValueError("discount must be < 1")
    v = {s: (mdp.goal_value if s in mdp.goal_states else 0.0) for s in mdp.states}
    q: dict = {}
    for _ in range(max_sweeps):
        residual = 0.0
        new_v = {}
        for s in mdp.states:
            if s in mdp.goal_states:
                for a in mdp.actions:
                    q[(s, a)] = mdp.goal_value
                new_v[s] = mdp.goal_value
                continue
            best = -math.inf
            for a in mdp.actions:
                total = -mdp.step_cost
                for s2, p in mdp.transitions[s][a].items():
                    total += mdp.discount * p * v[s2]
                old = q.get((s, a))
                q[(s, a)] = total
                if old is not None:
                    residual = max(residual, abs(total - old))
                else:
                    residual = math.inf
                best = max(best, total)
            new_v[s] = best
        v = new_v
        if residual < eps:
            mdp.q = q
            return q
    raise RuntimeError("value iteration did not converge")


def greedy_policy(mdp: Mdp) -> dict:
    """Argmax policy; ties break toward the earliest declared action."""
    policy = {}
    for s in mdp.states:
        if s in mdp.goal_states:
            continue
        row = mdp.q_row(s)
        policy[s] = max(mdp.actions, key=lambda a: (row[a], -mdp.actions.index(a)))
    return policy


def softmax(values: dict, beta: float) -> dict:
    """Max-stabilized softmax over a {key: value} map."""
    m = max(values.values())
    exps = {k: math.exp(beta * (val - m)) for k, val in values.items()}
    z = sum(exps.values())
    return {k: e / z for k, e in exps.items()}


def action_likelihood(mdp: Mdp, state, action, beta: float = DEFAULT_BETA) -> float:
    """P(action | state) under softmax rationality on solved Q-values."""
    row = mdp.q_row(state)
    if action not in row:
        raise KeyError(f"unknown action {action}")
    return softmax(row, beta)[action]


@dataclass(frozen=True)
class IntentionPosterior:
    probs: dict  # goal id (incl. "none") -> probability
    flagged: frozenset = frozenset()  # goals scored with a fallback likelihood

    def __post_init__(self):
        total = sum(self.probs.values())
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"posterior sums to {total}")
        if any(p < -PROB_TOL for p in self.probs.values()):
            raise ValueError("negative posterior entry")

    def top(self) -> tuple:
        best = min(self.probs, key=lambda g: (-self.probs[g], g))
        return best, self.probs[best]

    def to_wire(self) -> dict:
        return {g: self.probs[g] for g in sorted(self.probs)}


@dataclass
class IntentionModel:
    """Candidate goals with their MDPs, context priors and observation model.

    All goal MDPs must share one action vocabulary; the `none` hypothesis
    scores every action at 1/|A|.
    """

    goals: list  # [(goal_id, Mdp)]
    context_priors: dict  # context -> {goal_id | "none": prob}
    beta: float = DEFAULT_BETA
    confusion: Optional[dict] = None  # observed -> {true: prob}; None = identity

    def __post_init__(self):
        vocab = None
        for gid, mdp in self.goals:
            if vocab is None:
                vocab = tuple(mdp.actions)
            elif tuple(mdp.actions) != vocab:
                raise ValueError(f"goal {gid} uses a different action vocabulary")
        self.action_vocab = vocab or ()
        for ctx, prior in self.context_priors.items():
            total = sum(prior.values())
            if abs(total - 1.0) > PROB_TOL:
                raise ValueError(f"prior for context {ctx} sums to {total}")

    def goal_ids(self) -> list:
        return [gid for gid, _ in self.goals]

    def mdp_for(self, goal_id: str) -> Mdp:
        for gid, mdp in self.goals:
            if gid == goal_id:
                return mdp
        raise KeyError(goal_id)

    def confusion_row(self, observed) -> dict:
        if self.confusion is None:
            return {observed: 1.0}
        return self.confusion[observed]


def initial_posterior(model: IntentionModel, context) -> IntentionPosterior:
    prior = model.context_priors[context]
    return IntentionPosterior(dict(prior))


def observe_action(model: IntentionModel, posterior: IntentionPosterior,
                   observed_action, believed_states: dict) -> IntentionPosterior:
    """One Bayes update from an observed action.

    `believed_states` maps goal id to the observed agent's believed state
    projected into that goal's MDP abstraction; None (or a state the MDP
    does not know) degrades that goal to a uniform likelihood and flags it.
    """
    n_actions = len(model.action_vocab)
    if n_actions == 0:
        raise ValueError("model has no action vocabulary")
    uniform = 1.0 / n_actions
    conf = model.confusion_row(observed_action)

    weights = {}
    flagged = set()
    for gid, mdp in model.goals:
        state = believed_states.get(gid)
        if state is None or state not in mdp.transitions and state not in mdp.goal_states:
            weights[gid] = uniform
            flagged.add(gid)
            continue
        like = 0.0
        sm = softmax(mdp.q_row(state), model.beta)
        for true_action, p_obs in conf.items():
            like += p_obs * sm.get(true_action, 0.0)
        weights[gid] = like
    weights[NONE_GOAL] = uniform * sum(conf.values())

    unnorm = {g: posterior.probs.get(g, 0.0) * weights.get(g, 0.0)
              for g in posterior.probs}
    total = sum(unnorm.values())
    if total <= 0.0:
        n = len(unnorm)
        return IntentionPosterior({g: 1.0 / n for g in unnorm}, frozenset(flagged))
    return IntentionPosterior({g: p / total for g, p in unnorm.items()},
                              frozenset(flagged))


def decide_help(posterior: IntentionPosterior, capability: dict,
                theta: float = DEFAULT_THETA) -> tuple:
    """("adopt", goal) when the argmax goal clears theta and is feasible,
    else ("observe", None). Ties break lexicographically."""
    goals = sorted(g for g in posterior.probs if g != NONE_GOAL)
    if not goals:
        return ("observe", None)
    best = min(goals, key=lambda g: (-posterior.probs[g], g))
    if posterior.probs[best] > theta and capability.get(best, False):
        return ("adopt", best)
    return ("observe", None)


# -- grid MDP builder -------------------------------------------------------

GRID_MOVES = ("move_N", "move_NE", "move_E", "move_SE",
              "move_S", "move_SW", "move_W", "move_NW")
GRID_GRAB = "grab"
GRID_WAIT = "wait"
GRID_ACTIONS = GRID_MOVES + (GRID_GRAB, GRID_WAIT)

_GRID_VECTORS = {
    "move_N": (0, -1), "move_NE": (1, -1), "move_E": (1, 0), "move_SE": (1, 1),
    "move_S": (0, 1), "move_SW": (-1, 1), "move_W": (-1, 0), "move_NW": (-1, -1),
}

DONE_STATE = "done"


def build_reach_mdp(free_cells: Iterable[tuple], target_cell: tuple,
                    reach: int = 1, step_cost: float = DEFAULT_STEP_COST,
                    goal_value: float = DEFAULT_GOAL_VALUE,
                    discount: float = DEFAULT_DISCOUNT) -> Mdp:
    """Navigation-and-grab MDP on a set of free cells.

    States are cells plus an absorbing `done`; `grab` succeeds within
    Chebyshev `reach` of the target cell and self-loops elsewhere. Blocked
    moves self-loop, so the action vocabulary is identical everywhere.
    """
    cells = sorted(set(map(tuple, free_cells)))
    cell_set = set(cells)
    if tuple(target_cell) not in cell_set:
        raise ValueError(f"target {target_cell} is not a free cell")
    states = tuple(cells) + (DONE_STATE,)
    transitions: dict = {}
    for c in cells:
        row = {}
        for a in GRID_MOVES:
            dx, dy = _GRID_VECTORS[a]
            dest = (c[0] + dx, c[1] + dy)
            row[a] = {dest: 1.0} if dest in cell_set else {c: 1.0}
        near = max(abs(c[0] - target_cell[0]), abs(c[1] - target_cell[1])) <= reach
        row[GRID_GRAB] = {DONE_STATE: 1.0} if near else {c: 1.0}
        row[GRID_WAIT] = {c: 1.0}
        transitions[c] = row
    return Mdp(states, GRID_ACTIONS, transitions, frozenset({DONE_STATE}),
               step_cost=step_cost, goal_value=goal_value, discount=discount)


def grid_action_label(action) -> str:
    """Map a kernel action to the grid MDP vocabulary."""
    from .world import MOVE, PICKUP, TAKE
    if action.kind == MOVE:
        return f"move_{action.direction}"
    if action.kind in (PICKUP, TAKE):
        return GRID_GRAB
    return GRID_WAIT
