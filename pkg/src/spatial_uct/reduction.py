"""Node-restriction policies: rank nodes of G0 by a local statistic and keep the top q%."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .graph import EdgeCostTable, SpatialNetwork
from .objectives import RewardFunction

STATISTICS = ("DEG", "ID", "NC", "BE", "BECS", "AE", "AECS", "RAND")
ALIASES = {"INVDEG": "ID"}


def canonical_statistic(name: str) -> str:
    key = ALIASES.get(name.upper(), name.upper())
    if key not in STATISTICS:
        raise ConfigError(f"unknown reduction statistic {name!r}; expected one of {STATISTICS}")
    return key


def subset_size(n: int, q: float) -> int:
    if not 0 < q < 100:
        raise ConfigError(f"reduction percentage must be in (0, 100), got {q}")
    k = math.ceil(q * n / 100 - 1e-9)
    if k >= n:
        raise ConfigError(f"q={q} keeps all {n} nodes; a reduction must be a strict subset")
    return max(k, 1)


def single_edge_gains(G0: SpatialNetwork, table: EdgeCostTable, reward_fn: RewardFunction) -> np.ndarray:
    """gain[i, j] = F(G0 + (i,j)) - F(G0) for j in K(i); NaN outside K(i).

    Existing edges have zero gain. Each unordered pair is evaluated once.
    """
    n = G0.n
    base = reward_fn(G0)
    gains = np.full((n, n), np.nan)
    memo: dict[tuple[int, int], float] = {}
    adj = G0.adj
    for i in range(n):
        for j in np.nonzero(table.connectable[i])[0].tolist():
            key = (min(i, j), max(i, j))
            if key not in memo:
                if adj[i, j]:
                    memo[key] = 0.0
                else:
                    a = adj.copy()
                    a[i, j] = a[j, i] = True
                    memo[key] = reward_fn.value_adj(a) - base
            gains[i, j] = memo[key]
    return gains


def node_scores(
    statistic: str,
    G0: SpatialNetwork,
    table: EdgeCostTable,
    reward_fn: RewardFunction | None = None,
) -> np.ndarray:
    stat = canonical_statistic(statistic)
    deg = G0.degrees().astype(float)
    if stat == "DEG":
        return deg
    if stat == "ID":
        return deg.max() - deg
    if stat == "NC":
        return table.connectable.sum(axis=1).astype(float)
    if stat == "RAND":
        raise ConfigError("RAND has no score; it samples a uniform subset")
    if reward_fn is None:
        raise ConfigError(f"statistic {stat} needs a reward function")
    gains = single_edge_gains(G0, table, reward_fn)
    if stat in ("BECS", "AECS"):
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = gains / table.costs
    has_k = table.connectable.any(axis=1)
    scores = np.full(G0.n, -np.inf)
    for i in np.nonzero(has_k)[0]:
        row = gains[i][table.connectable[i]]
        scores[i] = row.max() if stat in ("BE", "BECS") else row.mean()
    return scores


def reduction_policy(
    G0: SpatialNetwork,
    table: EdgeCostTable,
    reward_fn: RewardFunction | None,
    statistic: str,
    q: float,
    rng: np.random.Generator | None = None,
) -> frozenset[int]:
    """Top ceil(q*N/100) nodes by the statistic, ties by ascending id."""
    n = G0.n
    k = subset_size(n, q)
    stat = canonical_statistic(statistic)
    if stat == "RAND":
        if rng is None:
            raise ConfigError("RAND reduction needs a random generator")
        return frozenset(rng.choice(n, size=k, replace=False).tolist())
    scores = node_scores(stat, G0, table, reward_fn)
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    return frozenset(order[:k])
