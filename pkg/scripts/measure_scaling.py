"""Wall-clock time per planning move of UCT against graph size, with a log-log fit."""

import argparse
import time

import numpy as np

from spatial_uct.generators import kh_cohort
from spatial_uct.graph import build_cost_table
from spatial_uct.mcts import PlannerConfig, plan
from spatial_uct.objectives import ObjectiveKind


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[15, 25, 50, 75])
    ap.add_argument("--graphs", type=int, default=5)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    kind = ObjectiveKind.efficiency()
    warm = kh_cohort(10, 1, seed=1)[0]
    plan(warm, build_cost_table(warm, 1.0), kind, PlannerConfig(), seed=0)  # JIT compile

    per_move = []
    for n in args.sizes:
        ts = []
        for G in kh_cohort(n, args.graphs, seed=args.seed):
            t = build_cost_table(G, 1.0)
            t0 = time.perf_counter()
            res = plan(G, t, kind, PlannerConfig(c_p=0.1), seed=0)
            ts.append((time.perf_counter() - t0) / max(1, len(res.diagnostics)))
        per_move.append(np.mean(ts))
        print(f"n={n:4d}  {1e3 * per_move[-1]:9.2f} ms/move")
    slope = np.polyfit(np.log(args.sizes), np.log(per_move), 1)[0]
    print(f"log-log slope {slope:.2f}")


if __name__ == "__main__":
    main()
