"""Tree-search planning over adaptation sequences.

The planner grows a search tree from the current interaction state.  Each
iteration selects a node by the upper-confidence rule, expands one untried
adaptation, estimates the value of the new state either by a random rollout
evaluated with the predictive search models or by a learned value function,
and backpropagates the per-strategy reward vector to the root.

There is no terminal state -- the user could keep interacting forever -- so
the tree is depth-capped at the planning horizon and rollouts stop there.
The final choice is greedy: the root child with the highest mean combined
reward.  An invisible chosen edge is extended greedily through further
invisible edges so the user-facing change is the composite design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .adaptation import (
    Adaptation,
    NoChange,
    adaptation_to_json,
    apply_adaptation,
    enumerate_adaptations,
    transition,
)
from .menu import InteractionState, MenuDesign
from .user_model import ModelParams, RewardVector, ZERO_REWARD, reward

OBJECTIVES = ("average", "optimistic", "conservative")
REWARD_SOURCES = ("simulation", "value-net")
VISIBILITY_MODES = ("alternate", "visible")

# Rewards deeper in the horizon count less.  Besides expressing preference
# for near-term gains, a strong discount keeps two artifacts of random
# rollouts from corrupting the root-level ranking: their per-walk noise, and
# the "recovery credit" a damaged state earns because random walks out of a
# bad menu look better than random walks out of a good one.
DEFAULT_DISCOUNT = 0.25


@dataclass(frozen=True)
class PlannerConfig:
    iterations: int = 400
    horizon: int = 4
    exploration: float = 1.0 / math.sqrt(2.0)
    objective: str = "average"
    discount: float = DEFAULT_DISCOUNT
    conservative_penalty: float = 2.0
    reward_source: str = "simulation"
    rng_seed: int = 0
    session_length: int = 20
    visibility: str = "alternate"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.exploration < 0:
            raise ValueError("exploration must be >= 0")
        if not 0 < self.discount <= 1:
            raise ValueError("discount must be in (0, 1]")
        if self.conservative_penalty < 1:
            raise ValueError("conservative penalty must be >= 1")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.reward_source not in REWARD_SOURCES:
            raise ValueError(f"reward source must be one of {REWARD_SOURCES}")
        if self.visibility not in VISIBILITY_MODES:
            raise ValueError(f"visibility must be one of {VISIBILITY_MODES}")


class SearchNode:
    """One tree node: a state, its incoming adaptation, and visit statistics.

    ``edge_reward`` is the immediate per-strategy reward of the incoming
    adaptation, fixed at expansion time; backpropagation re-adds it for every
    simulation that passes through this node so a node's mean reward measures
    cumulative value from its own edge onward, not just its subtree's.
    """

    __slots__ = (
        "state", "incoming", "parent", "depth", "n", "r",
        "reward_sum", "edge_reward", "children", "untried",
    )

    def __init__(self, state: InteractionState, incoming: Adaptation | None, parent: "SearchNode | None"):
        self.state = state
        self.incoming = incoming
        self.parent = parent
        self.depth = 0 if parent is None else parent.depth + 1
        self.n = 0
        self.r = 0.0
        self.reward_sum = ZERO_REWARD
        self.edge_reward = ZERO_REWARD
        self.children: list[SearchNode] = []
        self.untried: list[Adaptation] | None = None  # filled lazily on first visit

    def mean_reward(self) -> float:
        return self.r / self.n if self.n else 0.0

    def mean_reward_vector(self) -> RewardVector:
        return self.reward_sum.scaled(1.0 / self.n) if self.n else ZERO_REWARD


def uct_score(child: SearchNode, parent_visits: int, exploration: float) -> float:
    """Mean reward plus the visit-count exploration bonus (child.n must be >= 1)."""
    return child.r / child.n + exploration * math.sqrt(
        math.log(parent_visits) / child.n
    )


def combine(vector: RewardVector, objective: str, penalty: float = 2.0) -> float:
    """Scalarize a per-strategy reward vector under an objective.

    ``average`` takes the mean, ``optimistic`` assumes the best-served
    strategy, ``conservative`` takes the worst one and multiplies losses by
    ``penalty`` so no strategy is harmed cheaply.
    """
    values = vector.as_tuple()
    if objective == "average":
        return sum(values) / len(values)
    if objective == "optimistic":
        return max(values)
    if objective == "conservative":
        worst = min(values)
        return worst if worst >= 0 else penalty * worst
    raise ValueError(f"unknown objective {objective!r}")


def select(root: SearchNode, horizon: int, exploration: float) -> SearchNode:
    """Descend by the upper-confidence rule to a node with untried adaptations.

    Stops at the horizon depth.  An unvisited child is always taken first;
    ties go to the earliest-created child.  Mean rewards are rescaled to the
    sibling range before the exploration bonus is added: the conventional
    exploration constant assumes unit-scale values, and raw cumulative
    rewards here can be orders of magnitude larger, which would starve all
    but one child of visits.  Rescaling is monotone, so with zero
    exploration the descent is still the plain arg-max of mean reward.
    """
    node = root
    while True:
        if node.depth >= horizon:
            return node
        if node.untried is None:
            node.untried = enumerate_adaptations(node.state.design)
        if node.untried:
            return node
        if not node.children:
            return node
        means = [child.r / child.n for child in node.children if child.n > 0]
        low, high = min(means), max(means)
        span = high - low
        log_parent = math.log(node.n) if node.n >= 1 else 0.0
        best = None
        best_score = -math.inf
        for child in node.children:
            if child.n == 0:
                score = math.inf
            else:
                mean = (child.r / child.n - low) / span if span > 0 else 0.0
                score = mean + exploration * math.sqrt(log_parent / child.n)
            if score > best_score:
                best = child
                best_score = score
        node = best


def expand(
    node: SearchNode,
    rng: np.random.Generator,
    config: PlannerConfig,
) -> SearchNode:
    """Attach one child for a uniformly random untried adaptation.

    In the alternating visibility schedule the first child of a node is
    expanded invisibly (a pathway state) and later siblings visibly.
    """
    if not node.untried:
        raise ValueError("node has no untried adaptations")
    idx = int(rng.integers(len(node.untried)))
    adaptation = node.untried.pop(idx)
    if config.visibility == "alternate":
        visible = bool(node.children)
    else:
        visible = True
    adaptation = replace(adaptation, visible=visible)
    child_state = transition(node.state, adaptation, config.session_length, rng)
    child = SearchNode(child_state, adaptation, node)
    node.children.append(child)
    return child


def rollout(
    state: InteractionState,
    depth_remaining: int,
    rng: np.random.Generator,
    params: ModelParams,
    discount: float = 1.0,
    session_length: int = 20,
) -> RewardVector:
    """Cumulative per-strategy reward of a random adaptation walk.

    Each step picks a feasible adaptation uniformly at random, accrues its
    reward discounted by step, and applies it visibly (the simulated user
    sees every rollout step).
    """
    total = ZERO_REWARD
    factor = 1.0
    for _ in range(depth_remaining):
        options = enumerate_adaptations(state.design)
        adaptation = options[int(rng.integers(len(options)))]
        after_design = apply_adaptation(state.design, adaptation)
        total = total + reward(state, after_design, params).scaled(factor)
        factor *= discount
        state = transition(
            state, replace(adaptation, visible=True), session_length, rng
        )
    return total


def backpropagate(
    leaf: SearchNode,
    vector: RewardVector,
    objective: str,
    penalty: float = 2.0,
    discount: float = 1.0,
) -> None:
    """Propagate a cumulative reward from ``leaf`` to the root.

    ``vector`` is the value from the leaf's own edge to the horizon.  Each
    ancestor receives the running total extended by its own edge reward, so
    every node's statistics estimate the return of committing to its edge.
    """
    node = leaf
    total = vector
    while True:
        node.n += 1
        node.r += combine(total, objective, penalty)
        node.reward_sum = node.reward_sum + total
        if node.parent is None:
            return
        node = node.parent
        total = node.edge_reward + total.scaled(discount)


@dataclass
class PlanResult:
    chosen: list[Adaptation]
    predicted: RewardVector
    iterations: int
    root_visits: int
    nodes: int
    root: SearchNode = field(repr=False)

    def to_json(self) -> dict:
        return {
            "chosen": [adaptation_to_json(a) for a in self.chosen],
            "predicted_reward": self.predicted.as_dict(),
            "iterations": self.iterations,
            "root_visits": self.root_visits,
            "nodes": self.nodes,
        }


def _count_nodes(root: SearchNode) -> int:
    total = 1
    stack = [root]
    while stack:
        node = stack.pop()
        total += len(node.children)
        stack.extend(node.children)
    return total


def plan(
    state: InteractionState,
    config: PlannerConfig,
    params: ModelParams,
    value_fn: Callable[[InteractionState, MenuDesign], RewardVector] | None = None,
) -> PlanResult:
    """Run the full search and return the greedy choice at the root.

    ``value_fn`` replaces rollouts when the reward source is the value
    network; it receives the pre-expansion state and the adapted design and
    must return the estimated cumulative reward vector.
    """
    if config.reward_source == "value-net" and value_fn is None:
        raise ValueError("value-net reward source requires a value function")
    rng = np.random.default_rng(config.rng_seed)
    root = SearchNode(state, None, None)
    for _ in range(config.iterations):
        node = select(root, config.horizon, config.exploration)
        if node.depth < config.horizon and node.untried:
            parent_state = node.state
            child = expand(node, rng, config)
            child.edge_reward = reward(parent_state, child.state.design, params)
            if config.reward_source == "simulation":
                future = rollout(
                    child.state,
                    config.horizon - child.depth,
                    rng,
                    params,
                    config.discount,
                    config.session_length,
                )
                value = child.edge_reward + future.scaled(config.discount)
            else:
                # the learned estimate already covers edge + future
                value = value_fn(parent_state, child.state.design)
            backpropagate(
                child, value, config.objective, config.conservative_penalty, config.discount
            )
        else:
            # horizon leaf: no future beyond it, only its own edge
            backpropagate(
                node,
                node.edge_reward,
                config.objective,
                config.conservative_penalty,
                config.discount,
            )

    visited = [c for c in root.children if c.n > 0]
    best = max(visited, key=lambda c: c.r / c.n)
    chosen = [best.incoming]
    node = best
    while not chosen[-1].visible and not isinstance(chosen[-1], NoChange):
        next_children = [c for c in node.children if c.n > 0]
        if not next_children:
            break
        node = max(next_children, key=lambda c: c.r / c.n)
        chosen.append(node.incoming)
    return PlanResult(
        chosen=chosen,
        predicted=best.mean_reward_vector(),
        iterations=config.iterations,
        root_visits=root.n,
        nodes=_count_nodes(root),
        root=root,
    )
