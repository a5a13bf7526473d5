"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 replay failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, DataError, GraphError, ReplayError
from .experiment import ablation_suite, beta_csv, beta_sweep, run_experiment, subset_distribution
from .manifest import GraphSource, ExperimentManifest, load_manifest, parse_objective, preset
from .mcts import DefaultPolicy, Reduction

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_REPLAY = 0, 1, 2, 3

log = logging.getLogger("spatial_uct")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _graph_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--graph", action="append", help="graph file (.gml or edge list); repeatable")
    g.add_argument("--kh", type=int, metavar="N", help="generate KH graphs with N nodes")
    p.add_argument("--count", type=int, default=1, help="number of KH graphs (default 1)")
    p.add_argument("--graph-seed", type=int, default=0, help="seed for KH generation")
    p.add_argument("--objective", default="efficiency", choices=["efficiency", "robustness"])
    p.add_argument("--robustness-sims", type=int, default=None)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--sims-multiplier", type=int, default=20)


def _out_args(p):
    p.add_argument("--out", help="output directory (default: print to stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def _manifest_from_flags(args, methods) -> ExperimentManifest:
    if args.kh is not None:
        src = GraphSource(kh={"n": args.kh, "count": args.count, "seed": args.graph_seed})
    elif args.graph:
        src = GraphSource(files=tuple(args.graph))
    else:
        raise ConfigError("give --graph PATH or --kh N (or a manifest)")
    objective = parse_objective({"name": args.objective, "sims": args.robustness_sims} if args.objective == "robustness"
                                else args.objective)
    seeds = getattr(args, "seeds", None) or [0 if args.seed is None else args.seed]
    return ExperimentManifest(
        graphs=src,
        objective=objective,
        methods=methods(objective.tag),
        tau=args.tau,
        rho=args.rho,
        seeds=list(seeds),
        sims_multiplier=args.sims_multiplier,
    )


def _load_or_flags(args, methods):
    if getattr(args, "manifest", None):
        m = load_manifest(args.manifest)
        if args.seed is not None:
            m.seeds = [args.seed]
        return m
    return _manifest_from_flags(args, methods)


def _planner_from_flags(args, objective: str):
    if args.method.upper() in ("UCT", "SG-UCT") or args.method.upper().startswith("SG-UCT_"):
        spec = preset(args.method, objective, args.sims_multiplier)
        kw = {}
        if args.c_p is not None:
            kw["c_p"] = args.c_p
        if args.beta is not None:
            kw["default_policy"] = DefaultPolicy.cost_biased(args.beta)
        if args.reduction is not None:
            stat, _, q = args.reduction.rpartition("-")
            kw["reduction"] = Reduction(stat, float(q))
        if args.btm:
            kw["btm"] = True
        if kw:
            spec = preset(args.method, objective, args.sims_multiplier, **kw)
        return spec
    return preset(args.method, objective)


def _emit(report, args):
    if args.out:
        for p in report.write(args.out, args.format):
            log.info("wrote %s", p)
    elif args.format == "json":
        print(report.to_json())
    else:
        print(report.aggregate_csv(summary=False), end="")


def cmd_plan(args):
    holder = {}

    def methods(obj):
        holder["m"] = _planner_from_flags(args, obj)
        return [holder["m"]]

    args.seeds = [args.seed if args.seed is not None else 0]
    manifest = _manifest_from_flags(args, methods)
    report = run_experiment(manifest)
    if args.out:
        _emit(report, args)
    elif args.format == "json":
        print(report.to_json())
    else:
        print(report.runs_csv(), end="")


def cmd_experiment(args):
    m = load_manifest(args.manifest)
    if args.seed is not None:
        m.seeds = [args.seed]
    if args.workers:
        m.workers = args.workers
    report = run_experiment(m, progress=_progress)
    args.out = args.out or m.output
    _emit(report, args)


def cmd_ablation(args):
    m = _load_or_flags(args, lambda obj: [preset("UCT", obj)])
    report = ablation_suite(m, progress=_progress)
    args.out = args.out or m.output
    _emit(report, args)


def cmd_beta_sweep(args):
    m = _load_or_flags(args, lambda obj: [preset("UCT", obj)])
    table, report = beta_sweep(m, args.betas, progress=_progress)
    text = beta_csv(table)
    out = args.out or m.output
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "beta_sweep.csv").write_text(text)
        report.write(out, args.format)
    elif args.format == "json":
        print(json.dumps([{"beta": b, "mean": mu, "half_width": h} for b, mu, h in table], indent=2))
    else:
        print(text, end="")


def cmd_subset_dist(args):
    m = _load_or_flags(args, lambda obj: [preset("UCT", obj)])
    res = subset_distribution(m, args.subsets, args.q)
    out = args.out or m.output
    if args.format == "json" or out:
        text = json.dumps(res, indent=2)
    else:
        text = "subset,reward\n" + "".join(f"{k},{r!r}\n" for k, r in enumerate(res["rewards"]))
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "subset_distribution.json").write_text(text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def cmd_generate(args):
    from .generators import kh_cohort
    from .ingest import network_to_raw, serialize_edge_list

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    graphs = kh_cohort(args.n, args.count, args.seed, alpha=args.alpha, beta=args.beta)
    for k, G in enumerate(graphs):
        path = out / f"kh{args.n}_{k:03d}.txt"
        path.write_text(serialize_edge_list(network_to_raw(G)))
        log.info("wrote %s (%d nodes, %d edges)", path, G.n, G.edge_count)


def graph_stats(G, rho: float) -> dict:
    from .env import budget_from_tau
    from .graph import build_cost_table
    from .objectives import ObjectiveKind, RewardFunction

    table = build_cost_table(G, rho)
    deg = G.degrees()
    return {
        "nodes": G.n,
        "edges": G.edge_count,
        "edges_per_node": G.edge_count / G.n,
        "connected": G.is_connected(),
        "degree_min": int(deg.min()),
        "degree_max": int(deg.max()),
        "degree_mean": float(deg.mean()),
        "mean_connectable": float(table.connectable.sum(axis=1).mean()),
        "budget_tau_0.1": budget_from_tau(G, table, 0.1),
        "efficiency": RewardFunction(ObjectiveKind.efficiency(), G)(G),
        "robustness": RewardFunction(ObjectiveKind.robustness(), G, seed=0)(G),
    }


def cmd_inspect(args):
    from .ingest import load_graph

    rows = []
    for path in args.graphs:
        G = load_graph(path)
        rho = args.rho if args.rho is not None else 2.0
        rows.append({"graph": str(path), **graph_stats(G, rho)})
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        keys = list(rows[0])
        print(",".join(keys))
        for r in rows:
            print(",".join(f"{r[k]:.6g}" if isinstance(r[k], float) else str(r[k]) for k in keys))


def _progress(row):
    log.info("%s %s seed=%d reward=%.5f (%.1fs)", row.graph, row.method, row.seed, row.reward, row.wall_time)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spatial-uct", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("plan", help="plan one graph with one method")
    _graph_args(sp)
    sp.add_argument("--method", default="SG-UCT", help="UCT, SG-UCT, SG-UCT_<variant> or a baseline name")
    sp.add_argument("--c-p", type=float, default=None)
    sp.add_argument("--beta", type=float, default=None, help="cost-biased rollout bias")
    sp.add_argument("--reduction", default=None, metavar="STAT-Q", help="e.g. AECS-40")
    sp.add_argument("--btm", action="store_true")
    sp.add_argument("--seed", type=int, default=None)
    _out_args(sp)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("experiment", help="run a manifest")
    sp.add_argument("manifest")
    sp.add_argument("--seed", type=int, default=None, help="override the manifest's seeds with one seed")
    sp.add_argument("--workers", type=int, default=None)
    _out_args(sp)
    sp.set_defaults(func=cmd_experiment)

    for name, func, helptext in (
        ("ablation", cmd_ablation, "13-method component ablation"),
        ("beta-sweep", cmd_beta_sweep, "mean reward of cost-biased rollouts per beta"),
        ("subset-dist", cmd_subset_dist, "UCT rewards under random node subsets"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--manifest", default=None)
        _graph_args(sp)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--seeds", type=int, nargs="+", default=None)
        if name == "beta-sweep":
            sp.add_argument("--betas", type=float, nargs="+", default=[0, 0.1, 0.25, 0.5, 1, 2.5, 5, 10, 25])
        if name == "subset-dist":
            sp.add_argument("--subsets", type=int, default=100)
            sp.add_argument("--q", type=float, default=40)
        _out_args(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("generate", help="write a KH cohort as edge-list files")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--alpha", type=float, default=10.0)
    sp.add_argument("--beta", type=float, default=1e-3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("inspect", help="print graph statistics")
    sp.add_argument("graphs", nargs="+")
    sp.add_argument("--rho", type=float, default=None)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ReplayError as exc:
        print(f"error: replay failure: {exc}", file=sys.stderr)
        return EXIT_REPLAY
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, (DataError, GraphError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
