from .types import (
    BORDER_MARGIN,
    CROP_CELLS,
    CROP_CHANNELS,
    CROP_PAD,
    CROP_WINDOW,
    DT,
    FREE,
    GPS_SIGMA,
    N_SUB,
    NO_CORRUPTION,
    OBS_CELLS,
    OBS_DIM,
    OBS_RADIUS,
    OBSTACLE,
    OMEGA_MAX,
    RESOLUTION,
    ROBOT_RADIUS,
    SLOW,
    V_MAX,
    WORLD_SIZE,
    ActionCommand,
    CorruptionSpec,
    EgocentricObservation,
    GpsReading,
    OverheadCrop,
    Pose,
    WorldSpec,
    wrap_angle,
)
from .dynamics import is_traversable, path_distance, step_dynamics
from .generate import (
    WORLD_KINDS,
    apply_corruption,
    generate_world,
    largest_component_fraction,
    validate_world,
)
from .sensors import observe, overhead_crop, sense_gps
from .worldio import export_rasters_csv, load_world, save_world

__all__ = [
    "ActionCommand", "CorruptionSpec", "EgocentricObservation", "GpsReading",
    "OverheadCrop", "Pose", "WorldSpec", "wrap_angle",
    "step_dynamics", "is_traversable", "path_distance",
    "generate_world", "apply_corruption", "validate_world",
    "largest_component_fraction", "WORLD_KINDS",
    "observe", "overhead_crop", "sense_gps",
    "save_world", "load_world", "export_rasters_csv",
    "DT", "N_SUB", "V_MAX", "OMEGA_MAX", "ROBOT_RADIUS", "GPS_SIGMA",
    "OBS_RADIUS", "OBS_CELLS", "OBS_DIM", "CROP_WINDOW", "CROP_CELLS",
    "CROP_CHANNELS", "CROP_PAD", "WORLD_SIZE", "RESOLUTION", "BORDER_MARGIN",
    "FREE", "SLOW", "OBSTACLE", "NO_CORRUPTION",
]
