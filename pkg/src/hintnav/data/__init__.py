from .collect import (
    CRUISE_SPEED,
    MAX_TRAJ_TICKS,
    POLICIES,
    Trajectory,
    collect_trajectory,
    dataset_stats,
    sample_free_pose,
)
from .chaining import (
    INTERSECT_RADIUS,
    ContrastiveSample,
    MacroGroup,
    chain_trajectories,
    sample_contrastive_batch,
)
from .io import load_dataset, save_dataset
from .pairs import (
    PAIR_GAP_MAX,
    PAIR_GAP_P,
    TrainingPair,
    rotate_from_frame,
    rotate_into_frame,
    sample_training_pair,
    sample_training_pairs,
)

__all__ = [
    "Trajectory", "collect_trajectory", "dataset_stats", "sample_free_pose",
    "MAX_TRAJ_TICKS", "CRUISE_SPEED", "POLICIES",
    "TrainingPair", "sample_training_pair", "sample_training_pairs",
    "rotate_into_frame", "rotate_from_frame", "PAIR_GAP_MAX", "PAIR_GAP_P",
    "MacroGroup", "ContrastiveSample", "chain_trajectories",
    "sample_contrastive_batch", "INTERSECT_RADIUS",
    "save_dataset", "load_dataset",
]
