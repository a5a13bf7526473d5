"""Experiment orchestration: graph cohorts x methods x seeds, replay checks, aggregation."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import DETERMINISTIC, run_baseline
from .env import MdpState, budget_from_tau, replay
from .errors import ConfigError, ReplayError
from .generators import kh_cohort
from .graph import SpatialNetwork, build_cost_table
from .ingest import load_graph
from .manifest import ExperimentManifest, MethodSpec, ablation_methods, preset
from .mcts import DefaultPolicy, PlannerConfig, plan
from .objectives import RewardFunction
from .reduction import subset_size


def aggregate_ci(values) -> tuple[float, float]:
    """Mean and 95% normal-approximation half-width 1.96 * sd / sqrt(n) (sample sd)."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("aggregate_ci needs at least one value")
    n = len(vals)
    mean = math.fsum(vals) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    return mean, 1.96 * math.sqrt(var) / math.sqrt(n)


def reward_seed(graph_index: int, seed: int) -> int:
    """Seed of the robustness random stream shared by every method on one (graph, seed) cell."""
    return int(np.random.SeedSequence([seed, graph_index, 0x5EED]).generate_state(1)[0])


@dataclass
class RunRow:
    graph: str
    method: str
    seed: int
    reward: float
    replay_reward: float
    actions: list[int]
    added_edges: list[tuple[int, int, float]]
    spent: float
    budget: float
    wall_time: float = 0.0

    def body(self) -> dict:
        d = {
            "graph": self.graph,
            "method": self.method,
            "seed": self.seed,
            "reward": self.reward,
            "replay_reward": self.replay_reward,
            "actions": self.actions,
            "added_edges": [[i, j, c] for i, j, c in self.added_edges],
            "spent": self.spent,
            "budget": self.budget,
        }
        return d


@dataclass
class AggregateRow:
    graph: str
    method: str
    mean: float
    half_width: float | None
    n: int


@dataclass
class RunReport:
    manifest: dict
    manifest_hash: str
    version: str
    rows: list[RunRow]
    aggregates: list[AggregateRow]
    summary: list[AggregateRow]
    extra: dict = field(default_factory=dict)

    def rewards(self, method: str, graph: str | None = None) -> list[float]:
        return [r.reward for r in self.rows if r.method == method and (graph is None or r.graph == graph)]

    def mean(self, method: str) -> float:
        for a in self.summary:
            if a.method == method:
                return a.mean
        raise KeyError(method)

    def by_seed(self, method: str) -> dict[tuple[str, int], float]:
        return {(r.graph, r.seed): r.reward for r in self.rows if r.method == method}

    def body(self) -> dict:
        return {
            "manifest": self.manifest,
            "manifest_hash": self.manifest_hash,
            "version": self.version,
            "runs": [r.body() for r in self.rows],
            "aggregates": [a.__dict__ for a in self.aggregates],
            "summary": [a.__dict__ for a in self.summary],
            **({"extra": self.extra} if self.extra else {}),
        }

    def to_json(self) -> str:
        doc = self.body()
        doc["timings"] = [{"graph": r.graph, "method": r.method, "seed": r.seed, "wall_time": r.wall_time} for r in self.rows]
        return json.dumps(doc, indent=2, sort_keys=True)

    def body_json(self) -> str:
        return json.dumps(self.body(), indent=2, sort_keys=True)

    def runs_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["graph", "method", "seed", "reward", "replay_reward", "edges_added", "spent", "budget", "actions"])
        for r in self.rows:
            w.writerow([r.graph, r.method, r.seed, repr(r.reward), repr(r.replay_reward), len(r.added_edges),
                        repr(r.spent), repr(r.budget), " ".join(map(str, r.actions))])
        return buf.getvalue()

    def aggregate_csv(self, summary: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["graph", "method", "mean", "half_width", "n"])
        for a in self.summary if summary else self.aggregates:
            w.writerow([a.graph, a.method, f"{a.mean:.6f}", "" if a.half_width is None else f"{a.half_width:.6f}", a.n])
        return buf.getvalue()

    def write(self, out_dir, fmt: str = "csv") -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "report.json"]
        (out / "report.json").write_text(self.to_json())
        if fmt == "csv":
            for name, text in (("runs.csv", self.runs_csv()), ("aggregate.csv", self.aggregate_csv()),
                               ("summary.csv", self.aggregate_csv(summary=True))):
                (out / name).write_text(text)
                written.append(out / name)
        return written


def load_graphs(manifest: ExperimentManifest) -> list[tuple[str, SpatialNetwork]]:
    src = manifest.graphs
    if src.kh is not None:
        kh = dict(src.kh)
        n, count, seed = int(kh.pop("n")), int(kh.pop("count")), int(kh.pop("seed"))
        graphs = kh_cohort(n, count, seed, **kh)
        return [(f"KH-{n}-{k}", g) for k, g in enumerate(graphs)]
    out = []
    for f in src.files:
        p = Path(f)
        if not p.is_absolute():
            p = Path(manifest.base_dir) / p
        out.append((p.stem, load_graph(p)))
    return out


def run_cell(
    name: str,
    G: SpatialNetwork,
    graph_index: int,
    method: MethodSpec,
    seed: int,
    manifest: ExperimentManifest,
    restriction=None,
) -> RunRow:
    table = build_cost_table(G, manifest.rho)
    budget = budget_from_tau(G, table, manifest.tau)
    rseed = reward_seed(graph_index, seed)
    reward_fn = RewardFunction(manifest.objective, G, seed=rseed)
    t0 = time.perf_counter()
    if method.is_baseline:
        ep = run_baseline(method.baseline, G, table, reward_fn, seed=seed, budget=budget)
        actions, reward = ep.actions, ep.reward
    else:
        res = plan(G, table, reward_fn, method.planner, seed=seed, budget=budget, restriction=restriction)
        actions, reward = res.trajectory.actions, res.trajectory.reward
    elapsed = time.perf_counter() - t0
    check = replay(MdpState(G, None, budget), actions, table, RewardFunction(manifest.objective, G, seed=rseed, cache=False))
    if check.reward != reward:
        raise ReplayError(f"{name}/{method.name}/seed {seed}: reward {reward!r} replays to {check.reward!r}")
    return RunRow(name, method.name, seed, reward, check.reward, list(actions), check.added_edges, check.spent, budget, elapsed)


def _cell_job(args):
    return run_cell(*args)


def aggregate(rows: list[RunRow], methods: list[MethodSpec], graphs: list[str]) -> tuple[list[AggregateRow], list[AggregateRow]]:
    det = {m.name for m in methods if m.is_baseline and m.baseline in DETERMINISTIC}
    aggs, summary = [], []
    for m in methods:
        for g in graphs:
            vals = [r.reward for r in rows if r.method == m.name and r.graph == g]
            mean, hw = aggregate_ci(vals)
            aggs.append(AggregateRow(g, m.name, mean, None if m.name in det else hw, len(vals)))
        seeds = sorted({r.seed for r in rows if r.method == m.name})
        per_seed = [statistics.fmean(r.reward for r in rows if r.method == m.name and r.seed == s) for s in seeds]
        mean, hw = aggregate_ci(per_seed)
        summary.append(AggregateRow("*", m.name, mean, None if m.name in det else hw, len(per_seed)))
    return aggs, summary


def run_experiment(manifest: ExperimentManifest, graphs=None, progress=None) -> RunReport:
    """Run every (graph, method, seed) cell, verify replays, aggregate over seeds.

    Cells are independent; with ``workers > 1`` they run in a process pool and
    are reassembled in grid order, so the report does not depend on the pool.
    """
    graphs = load_graphs(manifest) if graphs is None else graphs
    jobs = [
        (name, G, gi, m, seed, manifest)
        for gi, (name, G) in enumerate(graphs)
        for m in manifest.methods
        for seed in manifest.seeds
    ]
    if manifest.workers > 1:
        with ProcessPoolExecutor(max_workers=manifest.workers) as pool:
            rows = list(pool.map(_cell_job, jobs))
    else:
        rows = []
        for job in jobs:
            rows.append(run_cell(*job))
            if progress:
                progress(rows[-1])
    aggs, summary = aggregate(rows, manifest.methods, [n for n, _ in graphs])
    return RunReport(manifest.to_dict(), manifest.digest(), __version__, rows, aggs, summary)


def ablation_suite(manifest: ExperimentManifest, graphs=None, progress=None) -> RunReport:
    methods = ablation_methods(manifest.objective.tag, manifest.sims_multiplier)
    return run_experiment(manifest.with_methods(methods), graphs, progress)


def beta_sweep(manifest: ExperimentManifest, betas, graphs=None, c_p: float | None = None, progress=None):
    """SG-UCT with the cost-biased default policy only, one run per beta.

    Returns ``(rows, report)`` with rows ``(beta, mean, half_width)``.
    """
    base = preset("SG-UCT_MINCOST", manifest.objective.tag, manifest.sims_multiplier).planner
    methods = []
    for b in betas:
        cfg = PlannerConfig(
            c_p=base.c_p if c_p is None else c_p,
            sims_multiplier=manifest.sims_multiplier,
            default_policy=DefaultPolicy.cost_biased(float(b)),
        )
        methods.append(MethodSpec(f"beta={float(b):g}", planner=cfg))
    report = run_experiment(manifest.with_methods(methods), graphs, progress)
    table = []
    for b, m in zip(betas, methods):
        s = next(a for a in report.summary if a.method == m.name)
        table.append((float(b), s.mean, s.half_width))
    return table, report


def beta_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["beta", "mean_reward", "half_width"])
    for b, m, h in table:
        w.writerow([f"{b:g}", f"{m:.6f}", f"{h:.6f}"])
    return buf.getvalue()


def subset_distribution(
    manifest: ExperimentManifest,
    subset_count: int,
    q: float = 40,
    graphs=None,
    graph_index: int = 0,
    c_p: float | None = None,
) -> dict:
    """Rewards of UCT restricted to uniformly random node subsets of one graph.

    Uses the manifest's first seed for both the subset draws and every search.
    Also records the unrestricted UCT reward for the same seed.
    """
    if subset_count < 1:
        raise ConfigError("subset_count must be positive")
    graphs = load_graphs(manifest) if graphs is None else graphs
    name, G = graphs[graph_index]
    seed = manifest.seeds[0]
    uct = preset("UCT", manifest.objective.tag, manifest.sims_multiplier)
    if c_p is not None:
        uct = MethodSpec("UCT", planner=PlannerConfig(c_p=c_p, sims_multiplier=manifest.sims_multiplier))
    rng = np.random.default_rng(np.random.SeedSequence([seed, graph_index, 0x5B5E7]))
    k = subset_size(G.n, q)
    subsets, rewards = [], []
    for _ in range(subset_count):
        phi = frozenset(rng.choice(G.n, size=k, replace=False).tolist())
        row = run_cell(name, G, graph_index, uct, seed, manifest, restriction=phi)
        subsets.append(sorted(phi))
        rewards.append(row.reward)
    full = run_cell(name, G, graph_index, uct, seed, manifest)
    return {"graph": name, "q": q, "seed": seed, "subsets": subsets, "rewards": rewards, "unrestricted": full.reward}
