"""Budgeted edge-addition planning on spatial networks with UCT and SG-UCT."""

__version__ = "0.1.0"

from .graph import SpatialNetwork, build_cost_table  # noqa: E402
from .objectives import ObjectiveKind, RewardFunction, efficiency, robustness  # noqa: E402
from .mcts import PlannerConfig, plan  # noqa: E402
from .baselines import run_baseline  # noqa: E402

__all__ = [
    "ObjectiveKind",
    "PlannerConfig",
    "RewardFunction",
    "SpatialNetwork",
    "build_cost_table",
    "efficiency",
    "plan",
    "robustness",
    "run_baseline",
]
