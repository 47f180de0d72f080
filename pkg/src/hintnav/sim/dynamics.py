"""Unicycle kinematics and footprint collision checks."""

from __future__ import annotations

import math

import numpy as np

from .types import (
    DT,
    N_SUB,
    OBSTACLE,
    ROBOT_RADIUS,
    ActionCommand,
    Pose,
    WorldSpec,
    wrap_angle,
)


def step_dynamics(p: Pose, a: ActionCommand, dt: float = DT, n_sub: int = N_SUB) -> Pose:
    """Advance a unicycle pose by one control tick.

    Integrates with n_sub sub-steps; each sub-step translates along the
    midpoint heading, which converges to the closed-form arc as n_sub grows.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = a.linear_velocity
    w = a.angular_velocity
    h = dt / n_sub
    x, y, th = p.x, p.y, p.heading
    for _ in range(n_sub):
        mid = th + 0.5 * w * h
        x += v * math.cos(mid) * h
        y += v * math.sin(mid) * h
        th += w * h
    return Pose(x, y, wrap_angle(th))


def is_traversable(w: WorldSpec, p: Pose, radius: float = ROBOT_RADIUS) -> bool:
    """True unless the footprint disk overlaps an obstacle cell or leaves bounds."""
    x, y = p.x, p.y
    if x - radius < 0.0 or y - radius < 0.0:
        return False
    if x + radius > w.bounds[0] or y + radius > w.bounds[1]:
        return False
    res = w.resolution
    r0 = max(int((y - radius) / res), 0)
    r1 = min(int((y + radius) / res), w.rows - 1)
    c0 = max(int((x - radius) / res), 0)
    c1 = min(int((x + radius) / res), w.cols - 1)
    grid = w.traversability
    for r in range(r0, r1 + 1):
        cy0 = r * res
        dy = 0.0 if cy0 <= y <= cy0 + res else min(abs(y - cy0), abs(y - cy0 - res))
        for c in range(c0, c1 + 1):
            if grid[r, c] != OBSTACLE:
                continue
            cx0 = c * res
            dx = 0.0 if cx0 <= x <= cx0 + res else min(abs(x - cx0), abs(x - cx0 - res))
            if dx * dx + dy * dy <= radius * radius:
                return False
    return True


def path_distance(poses: np.ndarray) -> float:
    """Polyline length of an (N, >=2) pose array."""
    if len(poses) < 2:
        return 0.0
    diffs = np.diff(np.asarray(poses)[:, :2], axis=0)
    return float(np.sum(np.hypot(diffs[:, 0], diffs[:, 1])))
