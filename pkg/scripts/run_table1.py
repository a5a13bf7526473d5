"""Main comparison on a KH cohort: SG-UCT, UCT and the baselines for both objectives."""

import argparse
from pathlib import Path

from spatial_uct.experiment import run_experiment
from spatial_uct.manifest import ExperimentManifest, GraphSource, preset
from spatial_uct.objectives import ObjectiveKind

METHODS = {
    "efficiency": ["SG-UCT", "UCT", "Random", "MinCost", "LBHB", "Greedy", "GreedyCS"],
    "robustness": ["SG-UCT", "UCT", "Random", "MinCost", "LDP", "FV", "ERes", "Greedy", "GreedyCS"],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=25)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--graph-seed", type=int, default=4242)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--tau", type=float, default=0.1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--no-greedy", action="store_true", help="skip the slow Greedy baselines")
    ap.add_argument("--out", default="results/table1")
    args = ap.parse_args()

    for obj, names in METHODS.items():
        if args.no_greedy:
            names = [m for m in names if not m.startswith("Greedy")]
        kind = ObjectiveKind.efficiency() if obj == "efficiency" else ObjectiveKind.robustness()
        m = ExperimentManifest(
            GraphSource(kh={"n": args.n, "count": args.count, "seed": args.graph_seed}),
            kind,
            [preset(n, obj) for n in names],
            tau=args.tau,
            seeds=list(range(args.seeds)),
            workers=args.workers,
        )
        report = run_experiment(m, progress=lambda r: print(f"{r.graph} {r.method} seed={r.seed} {r.reward:.4f}", flush=True))
        report.write(Path(args.out) / obj)
        print(f"\n{obj}")
        for a in report.summary:
            hw = "" if a.half_width is None else f" +- {a.half_width:.4f}"
            print(f"  {a.method:10s} {a.mean:.4f}{hw}")


if __name__ == "__main__":
    main()
