"""Core simulation types: poses, world rasters, sensor payloads, corruption."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Traversability cell codes.
FREE = 0
SLOW = 1
OBSTACLE = 2

# Kinematics defaults (one control tick = DT seconds).
DT = 0.5
N_SUB = 10
V_MAX = 2.0
OMEGA_MAX = 1.5
ROBOT_RADIUS = 0.5

# World defaults.
WORLD_SIZE = 200.0
RESOLUTION = 0.5
BORDER_MARGIN = 2.0

# Sensor defaults.
GPS_SIGMA = 2.5
OBS_RADIUS = 8.0
OBS_CELLS = 16
OBS_DIM = OBS_CELLS * OBS_CELLS + 2  # patch + (cos, sin) heading cells
CROP_WINDOW = 64.0
CROP_CELLS = 16
CROP_CHANNELS = 3
CROP_PAD = 0.0


def wrap_angle(theta: float) -> float:
    """Normalize an angle to [-pi, pi)."""
    return float((theta + math.pi) % (2.0 * math.pi) - math.pi)


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("pose coordinates must be finite")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class GpsReading:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("gps reading must be finite")

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class ActionCommand:
    """Velocity command; values are clamped to the platform limits."""

    linear_velocity: float
    angular_velocity: float

    def __post_init__(self):
        v = min(max(float(self.linear_velocity), 0.0), V_MAX)
        w = min(max(float(self.angular_velocity), -OMEGA_MAX), OMEGA_MAX)
        object.__setattr__(self, "linear_velocity", v)
        object.__setattr__(self, "angular_velocity", w)

    def as_array(self) -> np.ndarray:
        return np.array([self.linear_velocity, self.angular_velocity])


@dataclass(frozen=True)
class EgocentricObservation:
    """Robot-frame traversability patch plus heading cells, values in [0, 1]."""

    features: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        object.__setattr__(self, "features", feats)

    @property
    def patch(self) -> np.ndarray:
        return self.features[:-2].reshape(OBS_CELLS, OBS_CELLS)

    @property
    def heading_cells(self) -> np.ndarray:
        return self.features[-2:]


@dataclass(frozen=True)
class OverheadCrop:
    """Axis-aligned window of the overhead channels around a GPS coordinate."""

    features: np.ndarray  # (CROP_CELLS, CROP_CELLS, channels)
    center: GpsReading


@dataclass(frozen=True)
class CorruptionSpec:
    """Controlled hint degradation: none, outdated map, or offset map."""

    mode: str = "none"
    offset_vector: tuple[float, float] = (0.0, 0.0)
    added_obstacles: tuple[tuple[float, float, float, float], ...] = ()

    def __post_init__(self):
        if self.mode not in ("none", "outdated", "offset"):
            raise ValueError(f"unknown corruption mode {self.mode!r}")
        object.__setattr__(self, "offset_vector", tuple(float(v) for v in self.offset_vector))
        object.__setattr__(
            self, "added_obstacles",
            tuple(tuple(float(v) for v in r) for r in self.added_obstacles),
        )
        if self.mode == "offset" and self.offset_vector == (0.0, 0.0):
            raise ValueError("offset mode requires a nonzero offset_vector")
        if self.mode == "outdated" and not self.added_obstacles:
            raise ValueError("outdated mode requires at least one added obstacle")


NO_CORRUPTION = CorruptionSpec()


@dataclass
class WorldSpec:
    """Ground-truth world: traversability costs, overhead hint raster, trails."""

    bounds: tuple[float, float]
    resolution: float
    traversability: np.ndarray  # (rows, cols) uint8 of FREE/SLOW/OBSTACLE
    overhead: np.ndarray  # (rows, cols, channels) float64 in [0, 1]
    trails: list[np.ndarray] = field(default_factory=list)
    seed: int = 0
    kind: str = "custom"
    regions: dict = field(default_factory=dict)

    @property
    def rows(self) -> int:
        return self.traversability.shape[0]

    @property
    def cols(self) -> int:
        return self.traversability.shape[1]

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x < self.bounds[0] and 0.0 <= y < self.bounds[1]

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the cell containing the point; caller checks bounds."""
        return int(y / self.resolution), int(x / self.resolution)

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (col + 0.5) * self.resolution, (row + 0.5) * self.resolution

    def cell_at(self, x: float, y: float) -> int:
        """Traversability code at a point; out-of-bounds reads as OBSTACLE."""
        if not self.in_bounds(x, y):
            return OBSTACLE
        r, c = self.cell_index(x, y)
        return int(self.traversability[r, c])
