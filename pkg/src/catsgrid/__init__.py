"""Coclustering of categorical time series on 3D data grids."""

from .dataset import CatsDataset, MarginalStats, Point, from_points, load_dataset, marginal_stats
from .errors import CatsGridError, DataFormatError, ModelError
from .gridmodel import (
    BoundaryShift,
    CellStats,
    GridModel,
    Merge,
    Move,
    ValueMove,
    apply_merge,
    apply_move,
    build_cell_stats,
    finest_model,
    interval_time_bounds,
    null_model,
)
from .cost import (
    CostBreakdown,
    cost,
    delta_cost_merge,
    delta_cost_move,
    log_binomial,
    log_factorial,
    log_partition_count,
)
from .optimizer import (
    OptimizationTrace,
    OptimizerConfig,
    build_initial_model,
    greedy_merge_optimize,
    post_optimize,
    vns_optimize,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryShift",
    "CatsDataset",
    "CatsGridError",
    "CellStats",
    "CostBreakdown",
    "DataFormatError",
    "GridModel",
    "MarginalStats",
    "Merge",
    "ModelError",
    "Move",
    "OptimizationTrace",
    "OptimizerConfig",
    "Point",
    "ValueMove",
    "apply_merge",
    "apply_move",
    "build_cell_stats",
    "build_initial_model",
    "cost",
    "delta_cost_merge",
    "delta_cost_move",
    "finest_model",
    "from_points",
    "greedy_merge_optimize",
    "interval_time_bounds",
    "load_dataset",
    "log_binomial",
    "log_factorial",
    "log_partition_count",
    "marginal_stats",
    "null_model",
    "post_optimize",
    "vns_optimize",
]
