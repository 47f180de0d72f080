"""Supervised pair construction for the latent waypoint model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..sim import DT, GPS_SIGMA, V_MAX, ActionCommand, EgocentricObservation
from .collect import Trajectory

PAIR_GAP_MAX = 40   # ticks; caps the regression horizon
PAIR_GAP_P = 0.1    # geometric component, oversamples short horizons
PAIR_GAP_UNIFORM_FRAC = 0.5  # mixture weight of the uniform component

# The gap mixture sets where distance predictions land for observation
# pairs that carry no relative signal (disjoint patches): the conditional
# mean gap. A geometric-only draw would park that plateau just below the
# close threshold and merge every aliased location into one graph node;
# the uniform component lifts it safely above the threshold.


@dataclass(frozen=True)
class TrainingPair:
    """(earlier, later) step pair with frame-local supervision targets."""

    obs_start: EgocentricObservation
    obs_target: EgocentricObservation
    action: ActionCommand          # taken at the earlier step
    temporal_distance: int         # ticks from earlier to later
    offset_xy: np.ndarray          # later GPS in the earlier robot frame

    def target_vector(self) -> np.ndarray:
        return np.array([
            self.action.linear_velocity,
            self.action.angular_velocity,
            float(self.temporal_distance),
            self.offset_xy[0],
            self.offset_xy[1],
        ])


def rotate_into_frame(vec_xy: np.ndarray, heading: float) -> np.ndarray:
    """World-frame displacement expressed in a robot frame with `heading`."""
    c, s = math.cos(heading), math.sin(heading)
    return np.array([c * vec_xy[0] + s * vec_xy[1],
                     -s * vec_xy[0] + c * vec_xy[1]])


def rotate_from_frame(vec_xy: np.ndarray, heading: float) -> np.ndarray:
    """Inverse of rotate_into_frame."""
    c, s = math.cos(heading), math.sin(heading)
    return np.array([c * vec_xy[0] - s * vec_xy[1],
                     s * vec_xy[0] + c * vec_xy[1]])


def sample_training_pair(traj: Trajectory, rng: np.random.Generator,
                         d_max: int = PAIR_GAP_MAX, gap_p: float = PAIR_GAP_P,
                         gps_sigma: float = GPS_SIGMA) -> TrainingPair:
    """Draw one pair: uniform earlier index, geometric gap truncated at d_max.

    Draws violating the kinematic + noise bound on the offset (possible in
    the far noise tail, since the offset subtracts two readings) are
    redrawn so every emitted pair satisfies the invariant.
    """
    n = len(traj)
    if n < 2:
        raise ValueError("trajectory must have at least 2 steps")
    for _ in range(100):
        i = int(rng.integers(0, n))
        if rng.random() < PAIR_GAP_UNIFORM_FRAC:
            gap = int(rng.integers(0, d_max + 1))
        else:
            gap = int(rng.geometric(gap_p)) - 1
        gap = min(gap, d_max, n - 1 - i)
        j = i + gap
        offset = rotate_into_frame(traj.gps[j] - traj.gps[i], traj.poses[i, 2])
        bound = V_MAX * DT * gap + 6.0 * gps_sigma
        if float(np.hypot(*offset)) <= bound:
            break
    else:
        raise RuntimeError("could not draw a pair inside the offset bound")
    return TrainingPair(
        obs_start=EgocentricObservation(traj.obs[i]),
        obs_target=EgocentricObservation(traj.obs[j]),
        action=ActionCommand(*traj.actions[i]),
        temporal_distance=gap,
        offset_xy=offset,
    )


def sample_training_pairs(trajectories, count: int, rng: np.random.Generator,
                          d_max: int = PAIR_GAP_MAX, gap_p: float = PAIR_GAP_P,
                          gps_sigma: float = GPS_SIGMA) -> list[TrainingPair]:
    """Draw pairs across a dataset, trajectories weighted by step count."""
    eligible = [t for t in trajectories if len(t) >= 2]
    if not eligible:
        raise ValueError("no trajectory with >= 2 steps")
    weights = np.array([len(t) for t in eligible], dtype=np.float64)
    weights /= weights.sum()
    picks = rng.choice(len(eligible), size=count, p=weights)
    return [sample_training_pair(eligible[k], rng, d_max, gap_p, gps_sigma)
            for k in picks]
