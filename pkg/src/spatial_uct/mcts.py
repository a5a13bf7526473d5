"""UCT and SG-UCT planning over the edge-addition MDP.

SG-UCT is UCT plus three switches on :class:`PlannerConfig`: best trajectory
memorisation (``btm``), a cost-biased default policy, and a node restriction
applied to stub selection. Plain UCT is the config with all three off.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .env import BUDGET_TOL, MdpState, apply_action, budget_from_tau, replay, valid_action_mask
from .errors import ConfigError, ReplayError
from .graph import EdgeCostTable, SpatialNetwork
from .objectives import ObjectiveKind, RewardFunction, _objective_kernel
from .reduction import canonical_statistic, reduction_policy

UNIFORM = "uniform"
COST_BIASED = "cost_biased"


@dataclass(frozen=True)
class DefaultPolicy:
    kind: str = UNIFORM
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in (UNIFORM, COST_BIASED):
            raise ConfigError(f"unknown default policy {self.kind!r}")
        if self.beta < 0:
            raise ConfigError("beta must be non-negative")

    @classmethod
    def cost_biased(cls, beta: float) -> "DefaultPolicy":
        return cls(COST_BIASED, float(beta))


@dataclass(frozen=True)
class Reduction:
    statistic: str
    q: float

    def __post_init__(self):
        object.__setattr__(self, "statistic", canonical_statistic(self.statistic))
        if not 0 < self.q < 100:
            raise ConfigError(f"reduction q must be in (0, 100), got {self.q}")

    @property
    def label(self) -> str:
        return f"{self.statistic}-{self.q:g}"


@dataclass(frozen=True)
class PlannerConfig:
    c_p: float = 0.1
    n_sims_per_move: int | None = None
    sims_multiplier: int = 20
    default_policy: DefaultPolicy = field(default_factory=DefaultPolicy)
    reduction: Reduction | None = None
    btm: bool = False
    cp_standardization: bool = True

    def __post_init__(self):
        if self.c_p < 0:
            raise ConfigError("c_p must be non-negative")
        if self.n_sims_per_move is not None and self.n_sims_per_move < 1:
            raise ConfigError("n_sims_per_move must be positive")

    def sims_for(self, n: int) -> int:
        return self.n_sims_per_move if self.n_sims_per_move is not None else self.sims_multiplier * n

    @classmethod
    def uct(cls, c_p: float = 0.1, **kw) -> "PlannerConfig":
        return cls(c_p=c_p, **kw)

    @classmethod
    def sg_uct(cls, c_p: float = 0.05, beta: float = 25.0, statistic: str = "AECS", q: float = 40, **kw) -> "PlannerConfig":
        return cls(
            c_p=c_p,
            default_policy=DefaultPolicy.cost_biased(beta),
            reduction=Reduction(statistic, q),
            btm=True,
            **kw,
        )


class SearchNode:
    __slots__ = ("state", "parent", "action", "children", "untried", "visits", "value_sum")

    def __init__(self, state: MdpState, actions: list[int], parent: "SearchNode | None" = None, action: int | None = None):
        self.state = state
        self.parent = parent
        self.action = action
        self.children: list[SearchNode] = []
        self.untried = list(actions)
        self.visits = 0
        self.value_sum = 0.0

    @property
    def terminal(self) -> bool:
        return not self.untried and not self.children

    @property
    def mean(self) -> float:
        return self.value_sum / self.visits if self.visits else float("nan")

    def __repr__(self):
        return f"SearchNode(action={self.action}, N={self.visits}, R={self.value_sum:.4g})"


@dataclass
class BestTrajectory:
    actions: list[int]
    reward: float


@dataclass
class PlanResult:
    trajectory: BestTrajectory
    committed: list[int]
    diagnostics: list[dict]
    restriction: frozenset[int] | None
    initial_value: float
    simulations: int


def uct_score(return_sum: float, n_parent: int, n_child: int, c_p: float) -> float:
    return return_sum / n_child + 2.0 * c_p * math.sqrt(2.0 * math.log(n_parent) / n_child)


class _Tree:
    """Expansion helpers bound to one planning problem."""

    def __init__(self, table: EdgeCostTable, restriction: np.ndarray | None):
        self.table = table
        self.restriction = restriction

    def actions(self, s: MdpState) -> list[int]:
        mask = valid_action_mask(s.graph.adj, s.stub, s.budget, self.table, self.restriction)
        return np.nonzero(mask)[0].tolist()

    def node(self, s: MdpState, parent=None, action=None) -> SearchNode:
        return SearchNode(s, self.actions(s), parent, action)

    def expand(self, node: SearchNode) -> SearchNode:
        a = node.untried.pop(0)
        child = self.node(apply_action(node.state, a, self.table, check=False), node, a)
        node.children.append(child)
        return child


def select_child(node: SearchNode, c_p: float) -> SearchNode:
    """argmax of the UCT score; children are in ascending action order so ties go to the lowest id."""
    log_n = math.log(node.visits)
    best, best_score = None, -math.inf
    for ch in node.children:
        score = ch.value_sum / ch.visits + 2.0 * c_p * math.sqrt(2.0 * log_n / ch.visits)
        if score > best_score:
            best, best_score = ch, score
    return best


def tree_policy(root: SearchNode, c_p: float, tree: _Tree) -> tuple[SearchNode, list[int]]:
    node = root
    acts: list[int] = []
    while not node.terminal:
        if node.untried:
            child = tree.expand(node)
            acts.append(child.action)
            return child, acts
        node = select_child(node, c_p)
        acts.append(node.action)
    return node, acts


def edge_weights(costs: np.ndarray, beta: float) -> np.ndarray:
    """Cost-biased sampling weights (c_max - c)^beta, with 0^0 = 1; uniform if all weights vanish."""
    costs = np.asarray(costs, dtype=float)
    if costs.size == 0:
        return costs
    if beta == 0:
        return np.ones_like(costs)
    w = (costs.max() - costs) ** beta
    if not w.sum() > 0:
        return np.ones_like(costs)
    return w


def edge_probabilities(costs, beta: float) -> np.ndarray:
    w = edge_weights(costs, beta)
    return w / w.sum()


@njit(cache=True)
def _pick_weighted(w, count, u):
    total = 0.0
    for k in range(count):
        total += w[k]
    u = u * total
    acc = 0.0
    for k in range(count):
        acc += w[k]
        if u < acc:
            return k
    return count - 1


@njit(cache=True)
def _pair_weights(cost, count, beta, w):
    # (c_max - c)^beta, 0^0 = 1, uniform when every weight is zero
    cmax = -np.inf
    for k in range(count):
        if cost[k] > cmax:
            cmax = cost[k]
    total = 0.0
    for k in range(count):
        w[k] = 1.0 if beta == 0 else (cmax - cost[k]) ** beta
        total += w[k]
    if not total > 0:
        for k in range(count):
            w[k] = 1.0


@njit(cache=True)
def _rollout_kernel(adj, stub, budget, costs, connectable, restr, cost_biased, beta, tol, rng, out):
    """Random play to a terminal state. Mutates ``adj``, writes actions to ``out`` and returns their count."""
    n = adj.shape[0]
    m = 0
    us = np.empty(n * n, dtype=np.int64)
    vs = np.empty(n * n, dtype=np.int64)
    cs = np.empty(n * n)
    w = np.empty(n * n)
    stubs = np.empty(n, dtype=np.int64)
    while True:
        if stub >= 0:
            cnt = 0
            for j in range(n):
                if j != stub and connectable[stub, j] and not adj[stub, j] and costs[stub, j] <= budget + tol:
                    vs[cnt] = j
                    cs[cnt] = costs[stub, j]
                    cnt += 1
            if cnt == 0:
                break
            if cost_biased:
                _pair_weights(cs, cnt, beta, w)
                v = vs[_pick_weighted(w, cnt, rng.random())]
            else:
                v = vs[rng.integers(0, cnt)]
            out[m] = v
            m += 1
            budget -= costs[stub, v]
            adj[stub, v] = True
            adj[v, stub] = True
            stub = -1
            continue
        cnt = 0
        ns = 0
        for i in range(n):
            if not restr[i]:
                continue
            has = False
            for j in range(n):
                if connectable[i, j] and not adj[i, j] and costs[i, j] <= budget + tol:
                    has = True
                    if cost_biased:
                        us[cnt] = i
                        vs[cnt] = j
                        cs[cnt] = costs[i, j]
                        cnt += 1
                    else:
                        break
            if has:
                stubs[ns] = i
                ns += 1
        if ns == 0:
            break
        if cost_biased:
            _pair_weights(cs, cnt, beta, w)
            k = _pick_weighted(w, cnt, rng.random())
            u, v = us[k], vs[k]
            out[m] = u
            out[m + 1] = v
            m += 2
            budget -= costs[u, v]
            adj[u, v] = True
            adj[v, u] = True
        else:
            stub = stubs[rng.integers(0, ns)]
            out[m] = stub
            m += 1
    return m


def rollout(
    state: MdpState,
    policy: DefaultPolicy,
    table: EdgeCostTable,
    reward_fn: RewardFunction,
    rng: np.random.Generator,
    restriction: np.ndarray | None = None,
) -> tuple[float, list[int]]:
    """Play ``policy`` to a terminal state; returns (F(G_T), actions taken).

    Uniform play picks a stub among nodes with an open pair, then a target.
    Cost-biased play samples a whole (stub, target) pair in one step.
    """
    adj = state.graph.adj.copy()
    n = adj.shape[0]
    restr = np.ones(n, dtype=bool) if restriction is None else restriction
    out = np.empty(n * n + 2, dtype=np.int64)
    m = _rollout_kernel(
        adj, -1 if state.stub is None else state.stub, float(state.budget), table.costs, table.connectable,
        restr, policy.kind == COST_BIASED, float(policy.beta), BUDGET_TOL, rng, out,
    )
    return reward_fn.value_adj(adj), out[:m].tolist()


@njit(cache=True)
def _valid_into(adj, stub, budget, costs, connectable, restr, tol, out, offset):
    """Valid actions of a state in ascending order, written from ``out[offset]``; returns the count."""
    n = adj.shape[0]
    cnt = 0
    if stub >= 0:
        for j in range(n):
            if j != stub and connectable[stub, j] and not adj[stub, j] and costs[stub, j] <= budget + tol:
                out[offset + cnt] = j
                cnt += 1
        return cnt
    for i in range(n):
        if not restr[i]:
            continue
        for j in range(n):
            if connectable[i, j] and not adj[i, j] and costs[i, j] <= budget + tol:
                out[offset + cnt] = i
                cnt += 1
                break
    return cnt


@njit(cache=True)
def _search_move(
    adj0, stub0, budget0, n_sims, c_p, costs, connectable, restr, cost_biased, beta, tol, rng,
    code, dist, ideal, keys, best_value, best_path,
):
    """One move of UCT from a fresh tree, entirely in compiled code.

    Mirrors the Python engine step for step (same expansion order, tie rules
    and random draws). Returns ``(child_actions, child_visits, child_sums,
    root_visits, root_sum, best_value, best_len)``; ``best_len`` is -1 when
    no simulation beat ``best_value``, else the new best path is in
    ``best_path[:best_len]``.
    """
    n = adj0.shape[0]
    cap = n_sims + 1
    parent = np.empty(cap, dtype=np.int64)
    action = np.empty(cap, dtype=np.int64)
    visits = np.zeros(cap, dtype=np.int64)
    vsum = np.zeros(cap)
    offset = np.empty(cap, dtype=np.int64)
    n_acts = np.empty(cap, dtype=np.int64)
    n_exp = np.zeros(cap, dtype=np.int64)
    acts = np.empty(cap * n, dtype=np.int64)
    kids = np.empty(cap * n, dtype=np.int64)
    path = np.empty(n * n + 2, dtype=np.int64)
    roll = np.empty(n * n + 2, dtype=np.int64)

    parent[0] = -1
    action[0] = -1
    offset[0] = 0
    n_acts[0] = _valid_into(adj0, stub0, budget0, costs, connectable, restr, tol, acts, 0)
    used = n_acts[0]
    count = 1
    best_len = -1

    for _ in range(n_sims):
        adj = adj0.copy()
        stub = stub0
        budget = budget0
        node = 0
        depth = 0
        while True:
            if n_acts[node] == 0:
                break
            if n_exp[node] < n_acts[node]:
                a = acts[offset[node] + n_exp[node]]
                if stub < 0:
                    stub = a
                else:
                    budget -= costs[stub, a]
                    adj[stub, a] = True
                    adj[a, stub] = True
                    stub = -1
                c = count
                count += 1
                parent[c] = node
                action[c] = a
                offset[c] = used
                n_acts[c] = _valid_into(adj, stub, budget, costs, connectable, restr, tol, acts, used)
                used += n_acts[c]
                kids[offset[node] + n_exp[node]] = c
                n_exp[node] += 1
                path[depth] = a
                depth += 1
                node = c
                break
            log_n = np.log(visits[node])
            best_child = -1
            best_score = -np.inf
            for k in range(n_exp[node]):
                ch = kids[offset[node] + k]
                score = vsum[ch] / visits[ch] + 2.0 * c_p * np.sqrt(2.0 * log_n / visits[ch])
                if score > best_score:
                    best_child = ch
                    best_score = score
            node = best_child
            a = action[node]
            if stub < 0:
                stub = a
            else:
                budget -= costs[stub, a]
                adj[stub, a] = True
                adj[a, stub] = True
                stub = -1
            path[depth] = a
            depth += 1
        m = _rollout_kernel(adj, stub, budget, costs, connectable, restr, cost_biased, beta, tol, rng, roll)
        delta = _objective_kernel(code, adj, dist, ideal, keys)
        x = node
        while x >= 0:
            visits[x] += 1
            vsum[x] += delta
            x = parent[x]
        if delta > best_value:
            best_value = delta
            best_len = depth + m
            best_path[:depth] = path[:depth]
            best_path[depth:best_len] = roll[:m]

    k = n_exp[0]
    ch = kids[offset[0]:offset[0] + k]
    return action[ch], visits[ch], vsum[ch], visits[0], vsum[0], best_value, best_len


def backup(leaf: SearchNode, delta: float) -> None:
    node = leaf
    while node is not None:
        node.visits += 1
        node.value_sum += delta
        node = node.parent


def max_child(root: SearchNode) -> SearchNode:
    """Visited child with the highest mean return; ties to the lowest action."""
    best = None
    for ch in root.children:
        if ch.visits and (best is None or ch.mean > best.mean):
            best = ch
    return best


ENGINES = ("compiled", "python")


def plan(
    G0: SpatialNetwork,
    table: EdgeCostTable,
    kind: ObjectiveKind | RewardFunction,
    config: PlannerConfig,
    seed: int = 0,
    budget: float | None = None,
    tau: float = 0.1,
    restriction: frozenset[int] | None = None,
    engine: str | None = None,
) -> PlanResult:
    """Run UCT / SG-UCT from S0 = (G0, no stub, budget) and return the planned trajectory.

    ``budget`` defaults to ``tau * C(E0)``. An explicit ``restriction`` overrides
    the config's reduction policy. In-tree returns are F(G_T); the reported
    trajectory reward is F(G_T) - F(G0).

    ``engine`` picks the search loop: ``"compiled"`` (default when the
    objective has a compiled kernel) or the reference ``"python"`` loop. Both
    give identical results for the same seed.
    """
    ss = np.random.SeedSequence(seed)
    search_ss, reduce_ss, reward_ss = ss.spawn(3)
    rng = np.random.default_rng(search_ss)
    if isinstance(kind, RewardFunction):
        reward_fn = kind
    else:
        reward_fn = RewardFunction(kind, G0, seed=int(reward_ss.generate_state(1)[0]))
    if budget is None:
        budget = budget_from_tau(G0, table, tau)
    kargs = reward_fn.kernel_args()
    if engine is None:
        engine = "compiled" if kargs is not None else "python"
    if engine not in ENGINES:
        raise ConfigError(f"unknown engine {engine!r}; choose from {ENGINES}")
    if engine == "compiled" and kargs is None:
        raise ConfigError("exact robustness has no compiled kernel; use engine='python'")

    phi = restriction
    if phi is None and config.reduction is not None:
        phi = reduction_policy(
            G0, table, reward_fn, config.reduction.statistic, config.reduction.q, np.random.default_rng(reduce_ss)
        )
    phi_mask = None
    if phi is not None:
        phi_mask = np.zeros(G0.n, dtype=bool)
        phi_mask[sorted(phi)] = True

    tree = _Tree(table, phi_mask)
    n_sims = config.sims_for(G0.n)
    f0 = reward_fn(G0)
    state = MdpState(G0, None, budget)
    best = [-math.inf, []]
    past: list[int] = []
    diagnostics: list[dict] = []
    prev_root_mean = None
    total_sims = 0
    move = _compiled_move if engine == "compiled" else _python_move

    while tree.actions(state):
        c_eff = config.c_p
        if config.cp_standardization and prev_root_mean is not None and prev_root_mean > 0:
            c_eff = config.c_p * prev_root_mean
        t0 = time.perf_counter()
        action, n_children, root_mean = move(state, past, n_sims, c_eff, config, table, tree, reward_fn, rng, best)
        total_sims += n_sims
        diagnostics.append(
            {
                "move": len(past),
                "action": action,
                "children": n_children,
                "root_mean": root_mean,
                "c_p_effective": c_eff,
                "best_value": best[0],
                "seconds": time.perf_counter() - t0,
            }
        )
        prev_root_mean = root_mean
        past.append(action)
        state = apply_action(state, action, table, check=False)

    best_value, best_acts = best
    s0 = MdpState(G0, None, budget)
    if config.btm and best_value > -math.inf:
        actions = best_acts
    else:
        actions = past
    result = replay(s0, actions, table, reward_fn)
    if config.btm and best_value > -math.inf and result.final_value != best_value:
        raise ReplayError(f"memorised value {best_value!r} replays to {result.final_value!r}")
    return PlanResult(
        trajectory=BestTrajectory(list(actions), result.reward),
        committed=list(past),
        diagnostics=diagnostics,
        restriction=phi,
        initial_value=f0,
        simulations=total_sims,
    )


def _python_move(state, past, n_sims, c_eff, config, table, tree, reward_fn, rng, best):
    root = tree.node(state)
    for _ in range(n_sims):
        leaf, tree_acts = tree_policy(root, c_eff, tree)
        delta, out_acts = rollout(leaf.state, config.default_policy, table, reward_fn, rng, tree.restriction)
        backup(leaf, delta)
        if delta > best[0]:
            best[0] = delta
            best[1] = past + tree_acts + out_acts
    return max_child(root).action, len(root.children), root.mean


def _compiled_move(state, past, n_sims, c_eff, config, table, tree, reward_fn, rng, best):
    n = state.graph.n
    code, dist, ideal, keys = reward_fn.kernel_args()
    restr = np.ones(n, dtype=bool) if tree.restriction is None else tree.restriction
    path = np.empty(n * n + 2, dtype=np.int64)
    acts, visits, sums, root_n, root_sum, best_value, best_len = _search_move(
        state.graph.adj.copy(), -1 if state.stub is None else state.stub, float(state.budget), n_sims, float(c_eff),
        table.costs, table.connectable, restr, config.default_policy.kind == COST_BIASED,
        float(config.default_policy.beta), BUDGET_TOL, rng, code, dist, ideal, keys, float(best[0]), path,
    )
    if best_len >= 0:
        best[0] = float(best_value)
        best[1] = past + path[:best_len].tolist()
    # MaxChild: highest mean among visited children, ties to the lowest action
    k = None
    for i in range(acts.shape[0]):
        if visits[i] and (k is None or sums[i] / visits[i] > sums[k] / visits[k]):
            k = i
    return int(acts[k]), int(acts.shape[0]), float(root_sum / root_n)
