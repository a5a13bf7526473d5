"""Kaiser-Hilgetag spatial growth model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GraphError
from .graph import SpatialNetwork

_BATCH = 4096


@dataclass(frozen=True)
class KhParams:
    n: int
    alpha: float = 10.0
    beta: float = 1e-3
    max_rejects: int = 1_000_000

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("KH graphs need n >= 1")
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigError("alpha and beta must be positive")
        if self.beta > 1:
            raise ConfigError("beta is a probability scale and must be <= 1")
        if self.max_rejects < 1:
            raise ConfigError("max_rejects must be positive")


def generate_kh(params: KhParams, rng: np.random.Generator) -> SpatialNetwork:
    """Grow a connected spatial graph node by node.

    Each candidate position is drawn uniformly in the unit square and tries to
    connect to every existing node u independently with probability
    ``beta * exp(-alpha * d(candidate, u))``. Candidates that form no edge are
    discarded. Candidates are drawn in batches; the first accepted candidate of
    a batch wins and the rest of the batch is discarded, which leaves the
    sequential process's distribution unchanged.
    """
    pos = np.empty((params.n, 2))
    pos[0] = rng.random(2)
    edges: list[tuple[int, int]] = []
    k = 1
    rejects = 0
    while k < params.n:
        cand = rng.random((_BATCH, 2))
        d = np.sqrt(((cand[:, None, :] - pos[None, :k, :]) ** 2).sum(axis=2))
        hits = rng.random((_BATCH, k)) < params.beta * np.exp(-params.alpha * d)
        ok = hits.any(axis=1)
        if not ok.any():
            rejects += _BATCH
            if rejects >= params.max_rejects:
                raise GraphError(f"KH growth stalled: {params.max_rejects} consecutive rejections at {k} nodes")
            continue
        first = int(np.argmax(ok))
        rejects += first
        if rejects >= params.max_rejects:
            raise GraphError(f"KH growth stalled: {params.max_rejects} consecutive rejections at {k} nodes")
        pos[k] = cand[first]
        edges.extend((int(u), k) for u in np.nonzero(hits[first])[0])
        k += 1
        rejects = 0
    return SpatialNetwork(pos, edges)


def kh_cohort(n: int, count: int, seed: int, **kw) -> list[SpatialNetwork]:
    """``count`` independent KH graphs from child streams of one seed."""
    params = KhParams(n=n, **kw)
    return [generate_kh(params, np.random.default_rng(s)) for s in np.random.SeedSequence(seed).spawn(count)]
