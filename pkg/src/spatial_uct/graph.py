"""Spatial graph representation, geometry, edge costs and graph-analytic primitives.

Node ids are always ``0..N-1``. Edges are stored as a symmetric boolean
adjacency matrix, which is what every hot path (objectives, action masks)
consumes directly. Edge *traversal* length is the Euclidean distance between
endpoints; edge weights only enter the construction cost.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .errors import DataError, GraphError

# WGS84 ellipsoid. The semi-major axis cancels under normalization but is kept
# so that raw projected coordinates are in metres.
WGS84_A = 6378137.0
WGS84_E = 0.0818191908426215
MERCATOR_MAX_LAT = 85.06

PINV_EIG_TOL = 1e-10
_TIE_RTOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class SpatialNetwork:
    """Undirected spatial graph with planar node positions in the unit square.

    Instances are immutable; :meth:`with_edge` returns a new network that
    shares the position and distance arrays with its parent.
    """

    __slots__ = ("positions", "adj", "weights", "dist")

    def __init__(self, positions, edges: Iterable[tuple[int, int]] = (), weights=None):
        pos = np.array(positions, dtype=float).reshape(-1, 2)
        n = pos.shape[0]
        if n < 1:
            raise GraphError("a spatial network needs at least one node")
        if not np.all(np.isfinite(pos)) or pos.min() < 0.0 or pos.max() > 1.0:
            raise GraphError("node positions must lie in [0,1] x [0,1]")
        adj = np.zeros((n, n), dtype=bool)
        w = np.zeros((n, n), dtype=float)
        edges = list(edges)
        if weights is None:
            weights = [1.0] * len(edges)
        else:
            weights = list(weights)
            if len(weights) != len(edges):
                raise GraphError("weights must match edges one-to-one")
        for (i, j), wij in zip(edges, weights):
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i},{j}) references a node outside 0..{n - 1}")
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if adj[i, j]:
                raise GraphError(f"duplicate edge ({min(i, j)},{max(i, j)})")
            if not wij > 0:
                raise GraphError(f"edge ({i},{j}) has non-positive weight {wij}")
            adj[i, j] = adj[j, i] = True
            w[i, j] = w[j, i] = float(wij)
        diff = pos[:, None, :] - pos[None, :, :]
        self.positions = _readonly(pos)
        self.adj = _readonly(adj)
        self.weights = _readonly(w)
        self.dist = _readonly(np.sqrt((diff**2).sum(axis=2)))

    @classmethod
    def _derive(cls, parent: "SpatialNetwork", adj: np.ndarray, weights: np.ndarray) -> "SpatialNetwork":
        obj = cls.__new__(cls)
        obj.positions = parent.positions
        obj.dist = parent.dist
        obj.adj = _readonly(adj)
        obj.weights = _readonly(weights)
        return obj

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.adj.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adj, k=1))
        return list(zip(i.tolist(), j.tolist()))

    def degrees(self) -> np.ndarray:
        return self.adj.sum(axis=1)

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adj[i, j])

    def with_edge(self, i: int, j: int, weight: float = 1.0) -> "SpatialNetwork":
        if i == j:
            raise GraphError(f"self-loop at node {i}")
        if self.adj[i, j]:
            raise GraphError(f"duplicate edge ({min(i, j)},{max(i, j)})")
        adj = self.adj.copy()
        w = self.weights.copy()
        adj[i, j] = adj[j, i] = True
        w[i, j] = w[j, i] = weight
        return SpatialNetwork._derive(self, adj, w)

    def with_edges(self, edges: Iterable[tuple[int, int]]) -> "SpatialNetwork":
        g = self
        for i, j in edges:
            g = g.with_edge(i, j)
        return g

    def is_connected(self) -> bool:
        return bool(components(self.adj).max() == 0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpatialNetwork):
            return NotImplemented
        return (
            np.array_equal(self.positions, other.positions)
            and np.array_equal(self.adj, other.adj)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.positions.tobytes(), np.packbits(self.adj).tobytes()))

    def __repr__(self) -> str:
        return f"SpatialNetwork(n={self.n}, edges={self.edge_count})"


def euclidean_distance(p: Sequence[float], q: Sequence[float]) -> float:
    return math.hypot(float(p[0]) - float(q[0]), float(p[1]) - float(q[1]))


def mercator(lat_deg: float, lon_deg: float) -> tuple[float, float]:
    """Ellipsoidal (WGS84) Mercator projection, metres."""
    phi = math.radians(lat_deg)
    lam = math.radians(lon_deg)
    s = math.sin(phi)
    y = WGS84_A * (math.atanh(s) - WGS84_E * math.atanh(WGS84_E * s))
    return WGS84_A * lam, y


def project_and_normalize(lat_lon: Sequence[tuple[float, float]]) -> np.ndarray:
    """Project (lat, lon) degrees with Mercator and fit the result into the unit square.

    The longer bounding-box axis spans exactly [0, 1]; the shorter one is
    scaled by the same factor and centred, so aspect ratio is preserved.
    """
    pts = []
    for node, (lat, lon) in enumerate(lat_lon):
        if not (math.isfinite(lat) and math.isfinite(lon)) or abs(lat) >= MERCATOR_MAX_LAT:
            raise DataError(f"node {node}: latitude {lat} outside Mercator range (|lat| < {MERCATOR_MAX_LAT})")
        pts.append(mercator(lat, lon))
    xy = np.array(pts, dtype=float).reshape(-1, 2)
    if xy.shape[0] < 2:
        raise DataError("need at least 2 points to normalize")
    lo = xy.min(axis=0)
    extent = xy.max(axis=0) - lo
    scale = extent.max()
    if scale <= 0:
        raise DataError("all points coincide; normalization extent is degenerate")
    out = (xy - lo) / scale
    out += (1.0 - extent / scale) / 2.0
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class EdgeCostTable:
    """Normalised pairwise costs and per-node connectable sets.

    ``connectable[i, j]`` is True iff ``j`` is in K(i). The relation is not
    symmetric in general because each node has its own threshold.
    """

    raw_costs: np.ndarray
    norm_factor: float
    costs: np.ndarray
    connectable: np.ndarray
    rho: float

    def K(self, i: int) -> set[int]:
        return set(np.nonzero(self.connectable[i])[0].tolist())

    def cost(self, i: int, j: int) -> float:
        return float(self.costs[i, j])

    def total_cost(self, edges: Iterable[tuple[int, int]]) -> float:
        return float(sum(self.costs[i, j] for i, j in edges))


def build_cost_table(G: SpatialNetwork, rho: float, new_edge_weight: float = 1.0) -> EdgeCostTable:
    if not rho > 0:
        raise GraphError(f"rho must be positive, got {rho}")
    n = G.n
    if n < 2:
        raise GraphError("cost table needs at least two nodes")
    w = np.where(G.adj, G.weights, new_edge_weight)
    raw = w * G.dist
    np.fill_diagonal(raw, 0.0)
    iu = np.triu_indices(n, k=1)
    norm = float(raw[iu].max())
    if norm <= 0:
        raise GraphError("all node positions coincide; costs cannot be normalised")
    costs = raw / norm
    deg = G.degrees()
    isolated = np.nonzero(deg == 0)[0]
    if isolated.size:
        raise GraphError(f"node {int(isolated[0])} is isolated; its connection threshold is undefined")
    longest = np.where(G.adj, costs, -np.inf).max(axis=1)
    # relative slack so pairs exactly at the threshold survive float rounding
    connectable = costs <= (rho * longest * (1 + _TIE_RTOL))[:, None]
    np.fill_diagonal(connectable, False)
    return EdgeCostTable(
        raw_costs=_readonly(raw),
        norm_factor=norm,
        costs=_readonly(costs),
        connectable=_readonly(connectable),
        rho=float(rho),
    )


@njit(cache=True)
def _floyd_warshall(lengths):
    n = lengths.shape[0]
    d = lengths.copy()
    for k in range(n):
        for i in range(n):
            dik = d[i, k]
            if dik == np.inf:
                continue
            for j in range(n):
                v = dik + d[k, j]
                if v < d[i, j]:
                    d[i, j] = v
    return d


def edge_lengths(adj: np.ndarray, dist: np.ndarray) -> np.ndarray:
    lengths = np.where(adj, dist, np.inf)
    np.fill_diagonal(lengths, 0.0)
    return lengths


def shortest_path_lengths(G: SpatialNetwork) -> np.ndarray:
    """All-pairs shortest path lengths (Floyd-Warshall); ``inf`` between components."""
    d = _floyd_warshall(edge_lengths(G.adj, G.dist))
    return np.minimum(d, d.T)


@njit(cache=True)
def _components(adj):
    n = adj.shape[0]
    label = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    c = 0
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = c
        top = 0
        stack[0] = s
        top = 1
        while top > 0:
            top -= 1
            u = stack[top]
            for v in range(n):
                if adj[u, v] and label[v] < 0:
                    label[v] = c
                    stack[top] = v
                    top += 1
        c += 1
    return label


def components(adj: np.ndarray) -> np.ndarray:
    """Connected-component label per node, labels numbered by lowest member id."""
    return _components(np.ascontiguousarray(adj, dtype=np.bool_))


def lcc_fraction(G: SpatialNetwork, removed: Iterable[int] = ()) -> float:
    n = G.n
    keep = np.ones(n, dtype=bool)
    for v in removed:
        keep[int(v)] = False
    if not keep.any():
        return 0.0
    labels = components(G.adj[np.ix_(keep, keep)])
    return float(np.bincount(labels).max()) / n


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _TIE_RTOL * max(1.0, abs(a), abs(b))


def betweenness_centrality(G: SpatialNetwork) -> np.ndarray:
    """Shortest-path betweenness with Euclidean edge lengths (Brandes accumulation).

    Unnormalised; each unordered source/target pair contributes once.
    """
    n = G.n
    nbrs = [np.nonzero(G.adj[u])[0].tolist() for u in range(n)]
    dist = G.dist
    bc = np.zeros(n)
    for s in range(n):
        order = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = np.zeros(n)
        sigma[s] = 1.0
        D = [math.inf] * n
        D[s] = 0.0
        settled = [False] * n
        heap = [(0.0, s)]
        while heap:
            du, u = heapq.heappop(heap)
            if settled[u] or du > D[u]:
                continue
            settled[u] = True
            order.append(u)
            for v in nbrs[u]:
                alt = du + dist[u, v]
                if settled[v]:
                    continue
                if D[v] == math.inf or (alt < D[v] and not _close(alt, D[v])):
                    D[v] = alt
                    sigma[v] = sigma[u]
                    preds[v] = [u]
                    heapq.heappush(heap, (alt, v))
                elif _close(alt, D[v]):
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        delta = np.zeros(n)
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return bc / 2.0


def laplacian(G: SpatialNetwork) -> np.ndarray:
    """Unweighted combinatorial Laplacian (unit conductance per edge)."""
    A = G.adj.astype(float)
    return np.diag(A.sum(axis=1)) - A


def laplacian_pseudoinverse(G: SpatialNetwork) -> np.ndarray:
    vals, vecs = np.linalg.eigh(laplacian(G))
    inv = np.zeros_like(vals)
    nz = vals > PINV_EIG_TOL
    inv[nz] = 1.0 / vals[nz]
    return (vecs * inv) @ vecs.T


def resistance_matrix(G: SpatialNetwork) -> np.ndarray:
    """Effective resistance between every pair, from the Laplacian pseudoinverse."""
    Lp = laplacian_pseudoinverse(G)
    d = np.diag(Lp)
    omega = d[:, None] + d[None, :] - 2.0 * Lp
    omega = (omega + omega.T) / 2.0
    np.fill_diagonal(omega, 0.0)
    return omega


def effective_resistance(G: SpatialNetwork, i: int, j: int) -> float:
    if i == j:
        return 0.0
    Lp = laplacian_pseudoinverse(G)
    return float(Lp[i, i] + Lp[j, j] - 2.0 * Lp[i, j])


def fiedler_vector(G: SpatialNetwork) -> np.ndarray:
    """Unit-norm eigenvector of the second-smallest Laplacian eigenvalue.

    Sign is fixed so that the first clearly non-zero entry is positive.
    """
    if G.n < 2 or not G.is_connected():
        raise GraphError("Fiedler vector requires a connected graph with at least two nodes")
    vals, vecs = np.linalg.eigh(laplacian(G))
    y = vecs[:, 1].copy()
    y /= np.linalg.norm(y)
    nz = np.nonzero(np.abs(y) > 1e-12)[0]
    if nz.size and y[nz[0]] < 0:
        y = -y
    return y
