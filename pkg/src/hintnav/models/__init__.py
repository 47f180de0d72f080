from .heuristic import (
    LAMBDA_OVER,
    METERS_TO_TICKS,
    HeuristicQuery,
    OverheadHeuristic,
    export_cost_heatmap,
    gps_cost,
)
from .latent_goal import (
    CLOSE_THRESHOLD_TICKS,
    LatentGoalModel,
    VibBatchLoss,
    WaypointPrediction,
)

__all__ = [
    "LatentGoalModel", "WaypointPrediction", "VibBatchLoss",
    "CLOSE_THRESHOLD_TICKS",
    "OverheadHeuristic", "HeuristicQuery", "gps_cost", "export_cost_heatmap",
    "LAMBDA_OVER", "METERS_TO_TICKS",
]
