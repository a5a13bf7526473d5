"""UCT rewards when the first-edge endpoints are restricted to random node subsets."""

import argparse
import json

import numpy as np

from spatial_uct.experiment import subset_distribution
from spatial_uct.manifest import ExperimentManifest, GraphSource, preset
from spatial_uct.objectives import ObjectiveKind


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--objective", choices=["efficiency", "robustness"], default="efficiency")
    ap.add_argument("--subsets", type=int, default=100)
    ap.add_argument("--q", type=float, default=40)
    ap.add_argument("--n", type=int, default=25)
    ap.add_argument("--graph-seed", type=int, default=4242)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="write the raw rewards as JSON")
    args = ap.parse_args()

    kind = ObjectiveKind.efficiency() if args.objective == "efficiency" else ObjectiveKind.robustness()
    m = ExperimentManifest(
        GraphSource(kh={"n": args.n, "count": 1, "seed": args.graph_seed}),
        kind,
        [preset("UCT", args.objective)],
        seeds=[args.seed],
    )
    res = subset_distribution(m, args.subsets, args.q)
    r = np.asarray(res["rewards"])
    print(f"unrestricted UCT {res['unrestricted']:.4f}")
    print(f"restricted: mean {r.mean():.4f}, min {r.min():.4f}, max {r.max():.4f}, "
          f"share beating UCT {np.mean(r > res['unrestricted']):.2f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(res, fh, indent=2)


if __name__ == "__main__":
    main()
