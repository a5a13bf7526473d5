"""Mean reward of SG-UCT with cost-biased rollouts as the bias beta varies."""

import argparse
from pathlib import Path

from spatial_uct.experiment import beta_csv, beta_sweep
from spatial_uct.manifest import ExperimentManifest, GraphSource, preset
from spatial_uct.objectives import ObjectiveKind


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--objective", choices=["efficiency", "robustness"], default="efficiency")
    ap.add_argument("--betas", type=float, nargs="+", default=[0, 0.1, 0.25, 0.5, 1, 2.5, 5, 10, 25])
    ap.add_argument("--n", type=int, default=25)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--graph-seed", type=int, default=4242)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--out", default="results/beta_sweep.csv")
    args = ap.parse_args()

    kind = ObjectiveKind.efficiency() if args.objective == "efficiency" else ObjectiveKind.robustness()
    m = ExperimentManifest(
        GraphSource(kh={"n": args.n, "count": args.count, "seed": args.graph_seed}),
        kind,
        [preset("UCT", args.objective)],
        seeds=list(range(args.seeds)),
    )
    table, _ = beta_sweep(m, args.betas)
    text = beta_csv(table)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(text)
    print(text, end="")


if __name__ == "__main__":
    main()
