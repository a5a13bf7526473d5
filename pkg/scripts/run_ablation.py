"""The 13-method component ablation (reduction statistics, BTM, MINCOST) on a KH cohort."""

import argparse
from pathlib import Path

from spatial_uct.experiment import ablation_suite
from spatial_uct.manifest import ExperimentManifest, GraphSource, preset
from spatial_uct.objectives import ObjectiveKind


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--objective", choices=["efficiency", "robustness"], default="efficiency")
    ap.add_argument("--n", type=int, default=25)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--graph-seed", type=int, default=4242)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/ablation")
    args = ap.parse_args()

    kind = ObjectiveKind.efficiency() if args.objective == "efficiency" else ObjectiveKind.robustness()
    m = ExperimentManifest(
        GraphSource(kh={"n": args.n, "count": args.count, "seed": args.graph_seed}),
        kind,
        [preset("UCT", args.objective)],
        seeds=list(range(args.seeds)),
        workers=args.workers,
    )
    report = ablation_suite(m, progress=lambda r: print(f"{r.graph} {r.method} seed={r.seed} {r.reward:.4f}", flush=True))
    report.write(Path(args.out) / args.objective)
    for a in report.summary:
        print(f"{a.method:20s} {a.mean:.4f} +- {a.half_width:.4f}")


if __name__ == "__main__":
    main()
