"""Non-search edge-selection heuristics run step-wise under the same budget rules."""

from __future__ import annotations

import numpy as np

from .env import BUDGET_TOL, EpisodeResult, MdpState, budget_from_tau, replay
from .errors import ConfigError
from .graph import EdgeCostTable, SpatialNetwork, betweenness_centrality, fiedler_vector, resistance_matrix
from .objectives import EFFICIENCY, ROBUSTNESS, ObjectiveKind, RewardFunction

BASELINES = ("Random", "Greedy", "GreedyCS", "MinCost", "LBHB", "LDP", "FV", "ERes")

# objective applicability; None means both
APPLICABLE = {"LBHB": EFFICIENCY, "LDP": ROBUSTNESS, "FV": ROBUSTNESS, "ERes": ROBUSTNESS}
DETERMINISTIC = frozenset({"MinCost", "LBHB", "LDP", "FV", "ERes", "Greedy", "GreedyCS"})


def canonical_baseline(name: str) -> str:
    for b in BASELINES:
        if b.lower() == name.lower().replace("_", ""):
            return b
    raise ConfigError(f"unknown baseline {name!r}; expected one of {BASELINES}")


def check_applicable(kind: str, objective: str) -> None:
    need = APPLICABLE.get(kind)
    if need is not None and need != objective:
        raise ConfigError(f"baseline {kind} is only defined for the {need} objective, not {objective}")


def candidate_edges(s: MdpState, table: EdgeCostTable) -> list[tuple[int, int]]:
    """Unordered pairs (i<j) committable as stub->target in some order, absent and affordable."""
    if s.stub is not None:
        raise ValueError("candidate edges are defined at even parity only")
    reach = table.connectable | table.connectable.T
    ok = reach & ~s.graph.adj & (table.costs <= s.budget + BUDGET_TOL)
    i, j = np.nonzero(np.triu(ok, k=1))
    return list(zip(i.tolist(), j.tolist()))


def _argbest(cands, scores, maximize=True):
    # candidate lists are already lexicographically sorted, so first hit wins ties
    scores = np.asarray(scores, dtype=float)
    k = int(np.argmax(scores) if maximize else np.argmin(scores))
    return cands[k]


def select_edge(
    kind: str,
    s: MdpState,
    table: EdgeCostTable,
    reward_fn: RewardFunction,
    rng: np.random.Generator,
) -> tuple[int, int] | None:
    kind = canonical_baseline(kind)
    check_applicable(kind, reward_fn.kind.tag)
    cands = candidate_edges(s, table)
    if not cands:
        return None
    G = s.graph
    if kind == "Random":
        return cands[int(rng.integers(len(cands)))]
    if kind == "MinCost":
        return _argbest(cands, [table.costs[i, j] for i, j in cands], maximize=False)
    if kind in ("Greedy", "GreedyCS"):
        base = reward_fn(G)
        gains = []
        for i, j in cands:
            a = G.adj.copy()
            a[i, j] = a[j, i] = True
            g = reward_fn.value_adj(a) - base
            gains.append(g / table.costs[i, j] if kind == "GreedyCS" else g)
        return _argbest(cands, gains)
    if kind == "LDP":
        d = G.degrees()
        return _argbest(cands, [d[i] * d[j] for i, j in cands], maximize=False)
    if kind == "FV":
        y = fiedler_vector(G)
        return _argbest(cands, [abs(y[i] - y[j]) for i, j in cands])
    if kind == "ERes":
        omega = resistance_matrix(G)
        return _argbest(cands, [omega[i, j] for i, j in cands])
    if kind == "LBHB":
        g = betweenness_centrality(G)
        lo, hi = int(np.argmin(g)), int(np.argmax(g))
        pair = (min(lo, hi), max(lo, hi))
        if pair in set(cands):
            return pair
        return _argbest(cands, [abs(g[i] - g[j]) for i, j in cands])
    raise AssertionError(kind)


def commit_order(i: int, j: int, table: EdgeCostTable) -> tuple[int, int]:
    """Order an unordered pair as (stub, target) so the target lies in the stub's connectable set."""
    if table.connectable[i, j]:
        return i, j
    return j, i


def run_baseline(
    kind: str,
    G0: SpatialNetwork,
    table: EdgeCostTable,
    objective: ObjectiveKind | RewardFunction,
    seed: int = 0,
    budget: float | None = None,
    tau: float = 0.1,
) -> EpisodeResult:
    """Greedily commit edges chosen by ``kind`` until no candidate remains."""
    kind = canonical_baseline(kind)
    ss = np.random.SeedSequence(seed)
    select_ss, reward_ss = ss.spawn(2)
    rng = np.random.default_rng(select_ss)
    if isinstance(objective, RewardFunction):
        reward_fn = objective
    else:
        reward_fn = RewardFunction(objective, G0, seed=int(reward_ss.generate_state(1)[0]))
    check_applicable(kind, reward_fn.kind.tag)
    if budget is None:
        budget = budget_from_tau(G0, table, tau)
    s = MdpState(G0, None, budget)
    actions: list[int] = []
    while True:
        e = select_edge(kind, s, table, reward_fn, rng)
        if e is None:
            break
        u, v = commit_order(*e, table)
        actions.extend((u, v))
        s = MdpState(s.graph.with_edge(u, v), None, s.budget - float(table.costs[u, v]))
    return replay(MdpState(G0, None, budget), actions, table, reward_fn)
