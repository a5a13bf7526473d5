"""Global objectives over spatial networks: efficiency and targeted-attack robustness."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError, GraphError
from .graph import SpatialNetwork, _floyd_warshall, edge_lengths

EFFICIENCY = "efficiency"
ROBUSTNESS = "robustness"

MAX_EXACT_ORDERS = 2_000_000


@dataclass(frozen=True)
class ObjectiveKind:
    """Which objective to optimise and how robustness is estimated.

    ``robustness_sims=None`` means ceil(N/4) attack permutations. ``exact``
    averages over every tie-consistent attack order instead of sampling;
    ``adaptive`` recomputes degrees after each removal (sensitivity variant,
    off by default).
    """

    tag: str = EFFICIENCY
    robustness_sims: int | None = None
    exact: bool = False
    adaptive: bool = False

    def __post_init__(self):
        if self.tag not in (EFFICIENCY, ROBUSTNESS):
            raise ConfigError(f"unknown objective {self.tag!r}")
        if self.robustness_sims is not None and self.robustness_sims < 1:
            raise ConfigError("robustness_sims must be >= 1")
        if self.exact and self.adaptive:
            raise ConfigError("exact enumeration is only defined for the static attack order")

    def sims_for(self, n: int) -> int:
        if self.robustness_sims is not None:
            return self.robustness_sims
        return max(1, math.ceil(n / 4))

    @classmethod
    def efficiency(cls) -> "ObjectiveKind":
        return cls(EFFICIENCY)

    @classmethod
    def robustness(cls, sims: int | None = None, **kw) -> "ObjectiveKind":
        return cls(ROBUSTNESS, robustness_sims=sims, **kw)


def ideal_efficiency_sum(G: SpatialNetwork) -> float:
    n = G.n
    if n < 2:
        raise GraphError("efficiency needs at least two nodes")
    d = G.dist
    off = ~np.eye(n, dtype=bool)
    zero = np.argwhere((d == 0) & off)
    if zero.size:
        i, j = zero[0]
        raise GraphError(f"nodes {i} and {j} share a position; ideal efficiency is undefined")
    return float((1.0 / d[off]).sum())


@njit(cache=True)
def _efficiency_sum(lengths):
    sp = _floyd_warshall(lengths)
    n = sp.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j and sp[i, j] < np.inf:
                total += 1.0 / sp[i, j]
    return total


@njit(cache=True)
def _efficiency_adj(adj, dist):
    n = adj.shape[0]
    lengths = np.full((n, n), np.inf)
    for i in range(n):
        lengths[i, i] = 0.0
        for j in range(n):
            if adj[i, j]:
                lengths[i, j] = dist[i, j]
    return _efficiency_sum(lengths)


def efficiency(G: SpatialNetwork) -> float:
    ideal = ideal_efficiency_sum(G)
    return _efficiency_sum(edge_lengths(G.adj, G.dist)) / ideal


def attack_permutation(G: SpatialNetwork, rng: np.random.Generator) -> np.ndarray:
    """Nodes by descending degree, ties shuffled uniformly within each degree block."""
    return _static_orders(np.ascontiguousarray(G.adj), rng.random((1, G.n)))[0]


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _attack_curve_sum(adj, order):
    """Sum over i=1..N of LCC size after removing the first i nodes of ``order``.

    Computed in reverse: nodes are re-inserted from the back of the order and
    merged with union-find.
    """
    n = order.shape[0]
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    present = np.zeros(n, dtype=np.bool_)
    largest = 0
    total = 0
    for k in range(n - 1, 0, -1):
        u = order[k]
        present[u] = True
        if largest < 1:
            largest = 1
        for v in range(n):
            if adj[u, v] and present[v]:
                ru = _find(parent, u)
                rv = _find(parent, v)
                if ru != rv:
                    if size[ru] < size[rv]:
                        ru, rv = rv, ru
                    parent[rv] = ru
                    size[ru] += size[rv]
                    if size[ru] > largest:
                        largest = size[ru]
        total += largest
    return total


@njit(cache=True)
def _mean_attack_curve(adj, orders):
    n = orders.shape[1]
    acc = 0.0
    for s in range(orders.shape[0]):
        acc += _attack_curve_sum(adj, orders[s]) / (n * n)
    return acc / orders.shape[0]


@njit(cache=True)
def _adaptive_order(adj, keys):
    n = keys.shape[0]
    deg = np.zeros(n, dtype=np.int64)
    for u in range(n):
        for v in range(n):
            if adj[u, v]:
                deg[u] += 1
    alive = np.ones(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    for k in range(n):
        best = -1
        for u in range(n):
            if alive[u] and (best < 0 or deg[u] > deg[best] or (deg[u] == deg[best] and keys[u] < keys[best])):
                best = u
        order[k] = best
        alive[best] = False
        for v in range(n):
            if adj[best, v] and alive[v]:
                deg[v] -= 1
    return order


def attack_curve(G: SpatialNetwork, order) -> float:
    """(1/N) sum_i s(G, order, i) for one fixed removal order."""
    n = G.n
    return _attack_curve_sum(np.ascontiguousarray(G.adj), np.asarray(order, dtype=np.int64)) / (n * n)


OBJ_EFFICIENCY, OBJ_STATIC, OBJ_ADAPTIVE = 0, 1, 2
_NO_DIST = np.zeros((1, 1))


@njit(cache=True)
def _static_orders(adj, keys):
    n = adj.shape[0]
    deg = np.zeros(n)
    for u in range(n):
        for v in range(n):
            if adj[u, v]:
                deg[u] += 1.0
    orders = np.empty(keys.shape, dtype=np.int64)
    for s in range(keys.shape[0]):
        # degrees are integers, so a tie key in [0, 0.5) never crosses a block boundary
        orders[s] = np.argsort(-deg + 0.5 * keys[s], kind="mergesort")
    return orders


@njit(cache=True)
def _objective_kernel(code, adj, dist, ideal, keys):
    """Objective of one adjacency. ``keys`` holds the tie-breaking uniforms, one row per attack order."""
    if code == OBJ_EFFICIENCY:
        return _efficiency_adj(adj, dist) / ideal
    if code == OBJ_STATIC:
        return _mean_attack_curve(adj, _static_orders(adj, keys))
    orders = np.empty(keys.shape, dtype=np.int64)
    for s in range(keys.shape[0]):
        orders[s] = _adaptive_order(adj, keys[s])
    return _mean_attack_curve(adj, orders)


def _robustness_adj(adj, sims, rng, adaptive=False):
    n = adj.shape[0]
    if n < 2:
        raise GraphError("robustness needs at least two nodes")
    keys = rng.random((sims, n))
    return float(_objective_kernel(OBJ_ADAPTIVE if adaptive else OBJ_STATIC, adj, _NO_DIST, 1.0, keys))


def robustness(G: SpatialNetwork, sims: int, rng: np.random.Generator, adaptive: bool = False) -> float:
    """Monte Carlo estimate of the expected attack-curve area over tie-broken orders."""
    if sims < 1:
        raise ConfigError("sims must be >= 1")
    return _robustness_adj(np.ascontiguousarray(G.adj), sims, rng, adaptive)


def _exact_robustness_adj(adj):
    n = adj.shape[0]
    if n < 2:
        raise GraphError("robustness needs at least two nodes")
    deg = adj.sum(axis=1)
    blocks = [np.nonzero(deg == d)[0].tolist() for d in sorted(set(deg.tolist()), reverse=True)]
    count = math.prod(math.factorial(len(b)) for b in blocks)
    if count > MAX_EXACT_ORDERS:
        raise ConfigError(f"exact robustness would enumerate {count} attack orders")
    total = 0.0
    for parts in itertools.product(*(itertools.permutations(b) for b in blocks)):
        order = np.fromiter(itertools.chain.from_iterable(parts), dtype=np.int64, count=n)
        total += _attack_curve_sum(adj, order)
    return total / (count * n * n)


def robustness_exact(G: SpatialNetwork) -> float:
    """Expected attack-curve area averaged over every tie-consistent attack order."""
    return _exact_robustness_adj(np.ascontiguousarray(G.adj))


def objective_value(kind: ObjectiveKind, G: SpatialNetwork, rng: np.random.Generator | None = None) -> float:
    if kind.tag == EFFICIENCY:
        return efficiency(G)
    if kind.exact:
        return robustness_exact(G)
    if rng is None:
        raise ConfigError("the robustness objective needs a random generator")
    return robustness(G, kind.sims_for(G.n), rng, adaptive=kind.adaptive)


class RewardFunction:
    """Deterministic objective evaluator bound to one node set and one seed.

    Every robustness evaluation draws its attack orders from a fresh generator
    seeded with ``seed``, so the value is a pure function of the edge set and
    all graphs are compared under common random numbers. Results are memoised
    by adjacency pattern.
    """

    def __init__(self, kind: ObjectiveKind, G0: SpatialNetwork, seed: int = 0, cache: bool = True):
        self.kind = kind
        self.seed = int(seed)
        self.n = G0.n
        self.dist = G0.dist
        self.sims = kind.sims_for(G0.n)
        if self.n < 2:
            raise GraphError("objectives need at least two nodes")
        self._ideal = ideal_efficiency_sum(G0) if kind.tag == EFFICIENCY else 1.0
        if kind.tag == EFFICIENCY:
            self.code, self._keys = OBJ_EFFICIENCY, np.zeros((1, self.n))
        else:
            # a fresh generator per evaluation would redraw these same uniforms
            self.code = OBJ_ADAPTIVE if kind.adaptive else OBJ_STATIC
            self._keys = np.random.default_rng(self.seed).random((self.sims, self.n))
        self._cache: dict[bytes, float] | None = {} if cache else None
        self.evaluations = 0

    def value_adj(self, adj: np.ndarray) -> float:
        key = None
        if self._cache is not None:
            key = np.packbits(adj).tobytes()
            hit = self._cache.get(key)
            if hit is not None:
                return hit
        self.evaluations += 1
        adj = np.ascontiguousarray(adj)
        if self.kind.exact and self.kind.tag == ROBUSTNESS:
            val = _exact_robustness_adj(adj)
        else:
            val = float(_objective_kernel(self.code, adj, self.dist, self._ideal, self._keys))
        if key is not None:
            self._cache[key] = val
        return val

    def __call__(self, G: SpatialNetwork) -> float:
        return self.value_adj(G.adj)

    def kernel_args(self):
        """``(code, dist, ideal, keys)`` for compiled callers, or None when only the Python path applies."""
        if self.kind.exact and self.kind.tag == ROBUSTNESS:
            return None
        return self.code, self.dist, self._ideal, self._keys
