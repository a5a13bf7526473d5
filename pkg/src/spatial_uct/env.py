"""Deterministic edge-addition MDP.

An edge is added every two steps: at even parity the agent picks a stub
node, at odd parity it picks the node to connect the stub to, paying the
normalised edge cost out of the remaining budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidActionError
from .graph import EdgeCostTable, SpatialNetwork
from .objectives import ObjectiveKind, RewardFunction

BUDGET_TOL = 1e-9


@dataclass(frozen=True)
class MdpState:
    graph: SpatialNetwork
    stub: int | None
    budget: float

    @property
    def parity(self) -> int:
        return 0 if self.stub is None else 1


@dataclass
class EpisodeResult:
    actions: list[int]
    final_graph: SpatialNetwork
    reward: float
    added_edges: list[tuple[int, int, float]]
    initial_budget: float
    final_budget: float
    initial_value: float = float("nan")
    final_value: float = float("nan")

    @property
    def spent(self) -> float:
        return float(sum(c for _, _, c in self.added_edges))


def total_edge_cost(G: SpatialNetwork, table: EdgeCostTable) -> float:
    i, j = np.nonzero(np.triu(G.adj, k=1))
    return float(table.costs[i, j].sum())


def budget_from_tau(G0: SpatialNetwork, table: EdgeCostTable, tau: float) -> float:
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return tau * total_edge_cost(G0, table)


def initial_state(G0: SpatialNetwork, table: EdgeCostTable, tau: float) -> MdpState:
    return MdpState(G0, None, budget_from_tau(G0, table, tau))


def budget_set(i: int, b: float, table: EdgeCostTable) -> set[int]:
    mask = table.connectable[i] & (table.costs[i] <= b + BUDGET_TOL)
    return set(np.nonzero(mask)[0].tolist())


def open_pairs(adj: np.ndarray, budget: float, table: EdgeCostTable) -> np.ndarray:
    """Mask of (stub, target) pairs that can still be committed: affordable, connectable, absent."""
    return table.connectable & (table.costs <= budget + BUDGET_TOL) & ~adj


def valid_action_mask(
    adj: np.ndarray,
    stub: int | None,
    budget: float,
    table: EdgeCostTable,
    restriction: np.ndarray | None = None,
    literal: bool = False,
) -> np.ndarray:
    if stub is None:
        if literal:
            affordable = table.connectable & (table.costs <= budget + BUDGET_TOL)
            n = adj.shape[0]
            mask = (adj.sum(axis=1) < n - 1) & affordable.any(axis=1)
        else:
            mask = open_pairs(adj, budget, table).any(axis=1)
        if restriction is not None:
            mask = mask & restriction
        return mask
    row = table.connectable[stub] & (table.costs[stub] <= budget + BUDGET_TOL) & ~adj[stub]
    row = row.copy()
    row[stub] = False
    return row


def restriction_mask(n: int, phi) -> np.ndarray | None:
    if phi is None:
        return None
    mask = np.zeros(n, dtype=bool)
    mask[list(phi)] = True
    return mask


def valid_actions(
    s: MdpState,
    table: EdgeCostTable,
    restriction=None,
    literal: bool = False,
) -> list[int]:
    """Valid node choices in ``s``; ``restriction`` (a node set) applies only at even parity."""
    mask = valid_action_mask(s.graph.adj, s.stub, s.budget, table, restriction_mask(s.graph.n, restriction), literal)
    return np.nonzero(mask)[0].tolist()


def apply_action(s: MdpState, a: int, table: EdgeCostTable, literal: bool = False, check: bool = True) -> MdpState:
    a = int(a)
    if check:
        mask = valid_action_mask(s.graph.adj, s.stub, s.budget, table, literal=literal)
        if not (0 <= a < s.graph.n and mask[a]):
            raise InvalidActionError(f"action {a} is not valid (stub={s.stub}, budget={s.budget:.6g})")
    if s.stub is None:
        return MdpState(s.graph, a, s.budget)
    cost = float(table.costs[s.stub, a])
    return MdpState(s.graph.with_edge(s.stub, a), None, s.budget - cost)


def is_terminal(s: MdpState, table: EdgeCostTable, restriction=None, literal: bool = False) -> bool:
    return not valid_actions(s, table, restriction, literal)


def final_reward(kind: ObjectiveKind | RewardFunction, G_T: SpatialNetwork, G0: SpatialNetwork, rng=None) -> float:
    """F(G_T) - F(G0); both evaluated under the same robustness random stream."""
    if isinstance(kind, RewardFunction):
        f = kind
    else:
        seed = 0 if rng is None else int(rng.integers(2**63 - 1))
        f = RewardFunction(kind, G0, seed=seed)
    return f(G_T) - f(G0)


Policy = Callable[[MdpState, list[int], np.random.Generator], int]


def random_policy(state: MdpState, actions: list[int], rng: np.random.Generator) -> int:
    return actions[int(rng.integers(len(actions)))]


def run_episode(
    s0: MdpState,
    policy: Policy,
    table: EdgeCostTable,
    kind: ObjectiveKind | RewardFunction,
    rng: np.random.Generator,
    restriction=None,
    literal: bool = False,
    max_steps: int | None = None,
) -> EpisodeResult:
    """Drive ``policy`` from ``s0`` to a terminal state and score the final graph."""
    if isinstance(kind, RewardFunction):
        reward_fn = kind
    else:
        reward_fn = RewardFunction(kind, s0.graph, seed=int(rng.integers(2**63 - 1)))
    s = s0
    actions: list[int] = []
    added: list[tuple[int, int, float]] = []
    step = 0
    while True:
        legal = valid_actions(s, table, restriction, literal)
        if not legal:
            break
        if max_steps is not None and step >= max_steps:
            break
        a = policy(s, legal, rng)
        if a not in legal:
            raise InvalidActionError(f"step {step}: policy chose invalid action {a}")
        if s.stub is not None:
            added.append((s.stub, int(a), float(table.costs[s.stub, a])))
        s = apply_action(s, a, table, literal=literal, check=False)
        actions.append(int(a))
        step += 1
    f0 = reward_fn(s0.graph)
    fT = reward_fn(s.graph)
    return EpisodeResult(
        actions=actions,
        final_graph=s.graph,
        reward=fT - f0,
        added_edges=added,
        initial_budget=s0.budget,
        final_budget=s.budget,
        initial_value=f0,
        final_value=fT,
    )


def scripted_policy(actions: Sequence[int]) -> Policy:
    it = iter(list(actions))

    def policy(state, legal, rng):
        try:
            return next(it)
        except StopIteration:
            raise InvalidActionError("scripted actions exhausted before the episode terminated") from None

    return policy


def replay(
    s0: MdpState,
    actions: Sequence[int],
    table: EdgeCostTable,
    reward_fn: RewardFunction,
    literal: bool = False,
) -> EpisodeResult:
    """Re-simulate a recorded action list from ``s0``.

    The replay stops when the actions run out; a trajectory may end before the
    state is terminal (e.g. a trajectory planned under a node restriction).
    """
    s = s0
    added = []
    for step, a in enumerate(actions):
        mask = valid_action_mask(s.graph.adj, s.stub, s.budget, table, literal=literal)
        if not (0 <= a < s.graph.n and mask[a]):
            raise InvalidActionError(f"step {step}: recorded action {a} is not valid on replay")
        if s.stub is not None:
            added.append((s.stub, int(a), float(table.costs[s.stub, a])))
        s = apply_action(s, a, table, check=False)
    f0 = reward_fn(s0.graph)
    fT = reward_fn(s.graph)
    return EpisodeResult(list(map(int, actions)), s.graph, fT - f0, added, s0.budget, s.budget, f0, fT)
