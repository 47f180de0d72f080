"""Trajectory collection: smoothed random walks and trail following."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..sim import (
    DT,
    GPS_SIGMA,
    OMEGA_MAX,
    V_MAX,
    ActionCommand,
    Pose,
    WorldSpec,
    is_traversable,
    observe,
    sense_gps,
    step_dynamics,
    wrap_angle,
)

MAX_TRAJ_TICKS = 160  # 80 s per trajectory
CRUISE_SPEED = 1.7
LOOKAHEAD = 3.0

POLICIES = ("random_walk", "trail_follow")


@dataclass
class Trajectory:
    """One collected run, stored column-wise; `steps` iterates row tuples."""

    poses: np.ndarray    # (N, 3) x, y, heading
    gps: np.ndarray      # (N, 2)
    obs: np.ndarray      # (N, obs_dim)
    actions: np.ndarray  # (N, 2) linear, angular
    ticks: np.ndarray    # (N,) 0..N-1
    source: str

    def __len__(self) -> int:
        return len(self.ticks)

    @property
    def steps(self):
        for k in range(len(self)):
            yield (self.poses[k], self.gps[k], self.obs[k], self.actions[k],
                   int(self.ticks[k]))


class _RandomWalkPolicy:
    """Time-correlated command stream (mean-reverting with Gaussian kicks)."""

    def __init__(self, rng: np.random.Generator, v_mean=CRUISE_SPEED,
                 v_theta=0.5, v_sigma=0.6, w_theta=1.0, w_sigma=0.9):
        self.rng = rng
        self.v_mean, self.v_theta, self.v_sigma = v_mean, v_theta, v_sigma
        self.w_theta, self.w_sigma = w_theta, w_sigma
        self.v = v_mean
        self.w = 0.0

    def __call__(self, world: WorldSpec, pose: Pose) -> ActionCommand:
        sq = math.sqrt(DT)
        self.v += self.v_theta * (self.v_mean - self.v) * DT \
            + self.v_sigma * sq * self.rng.normal()
        self.w += self.w_theta * (0.0 - self.w) * DT \
            + self.w_sigma * sq * self.rng.normal()
        self.v = min(max(self.v, 0.0), V_MAX)
        self.w = min(max(self.w, -OMEGA_MAX), OMEGA_MAX)
        return ActionCommand(self.v, self.w)


class _TrailFollowPolicy:
    """Pure pursuit along the nearest trail polyline."""

    def __init__(self, world: WorldSpec, pose: Pose, lookahead=LOOKAHEAD,
                 cruise=CRUISE_SPEED):
        if not world.trails:
            raise ValueError("trail_follow needs a world with trails")
        self.lookahead = lookahead
        self.cruise = cruise
        best = None
        for poly in world.trails:
            pts, arcs = _densify(poly)
            d = np.hypot(pts[:, 0] - pose.x, pts[:, 1] - pose.y)
            k = int(np.argmin(d))
            if best is None or d[k] < best[0]:
                best = (d[k], pts, arcs, k)
        _, self.pts, self.arcs, k = best
        self.s = self.arcs[k]
        self.done = False

    def __call__(self, world: WorldSpec, pose: Pose) -> ActionCommand:
        # Advance progress to the nearest point in a forward window.
        window = (self.arcs >= self.s - 1.0) & (self.arcs <= self.s + 2.0 * self.cruise * DT + 1.0)
        idx = np.nonzero(window)[0]
        if len(idx) == 0:
            idx = np.arange(len(self.pts))
        d = np.hypot(self.pts[idx, 0] - pose.x, self.pts[idx, 1] - pose.y)
        self.s = self.arcs[idx[int(np.argmin(d))]]
        target_s = self.s + self.lookahead
        if target_s >= self.arcs[-1]:
            self.done = True
            target_s = self.arcs[-1]
        tx, ty = self.pts[int(np.searchsorted(self.arcs, target_s, side="left"))]
        alpha = wrap_angle(math.atan2(ty - pose.y, tx - pose.x) - pose.heading)
        omega = 2.0 * self.cruise * math.sin(alpha) / self.lookahead
        return ActionCommand(self.cruise, omega)


def _densify(poly: np.ndarray, step: float = 0.25):
    poly = np.asarray(poly, dtype=np.float64)
    out = [poly[0]]
    for a, b in zip(poly[:-1], poly[1:]):
        seg = b - a
        length = float(np.hypot(*seg))
        n = max(int(math.ceil(length / step)), 1)
        for k in range(1, n + 1):
            out.append(a + seg * (k / n))
    pts = np.asarray(out)
    d = np.hypot(*np.diff(pts, axis=0).T)
    arcs = np.concatenate([[0.0], np.cumsum(d)])
    return pts, arcs


def sample_free_pose(world: WorldSpec, rng: np.random.Generator,
                     max_tries: int = 1000) -> Pose:
    for _ in range(max_tries):
        x = rng.uniform(0.0, world.bounds[0])
        y = rng.uniform(0.0, world.bounds[1])
        heading = rng.uniform(-math.pi, math.pi)
        pose = Pose(x, y, heading)
        if is_traversable(world, pose):
            return pose
    raise RuntimeError("could not sample a traversable start pose")


def _trail_start(world: WorldSpec, rng: np.random.Generator) -> Pose:
    poly = world.trails[int(rng.integers(len(world.trails)))]
    pts, arcs = _densify(np.asarray(poly))
    k = int(rng.integers(len(pts) - 1))
    tangent = pts[k + 1] - pts[k]
    heading = math.atan2(tangent[1], tangent[0])
    return Pose(pts[k, 0], pts[k, 1], heading)


def collect_trajectory(world: WorldSpec, policy: str, rng: np.random.Generator,
                       start: Pose | None = None, max_ticks: int = MAX_TRAJ_TICKS,
                       gps_sigma: float = GPS_SIGMA) -> Trajectory:
    """Roll out one policy, truncating one tick before any collision."""
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if start is None:
        start = _trail_start(world, rng) if policy == "trail_follow" \
            else sample_free_pose(world, rng)
    if not is_traversable(world, start):
        raise ValueError("start pose is not traversable")
    controller = _RandomWalkPolicy(rng) if policy == "random_walk" \
        else _TrailFollowPolicy(world, start)

    poses, gps, obs, actions = [], [], [], []
    pose = start
    for _ in range(max_ticks):
        action = controller(world, pose)
        nxt = step_dynamics(pose, action)
        if not is_traversable(world, nxt):
            break
        poses.append([pose.x, pose.y, pose.heading])
        gps.append(sense_gps(world, pose, rng, gps_sigma).xy)
        obs.append(observe(world, pose).features)
        actions.append(action.as_array())
        pose = nxt
        if getattr(controller, "done", False):
            break
    n = len(poses)
    return Trajectory(
        poses=np.asarray(poses, dtype=np.float64).reshape(n, 3),
        gps=np.asarray(gps, dtype=np.float64).reshape(n, 2),
        obs=np.asarray(obs, dtype=np.float64).reshape(n, -1) if n else np.zeros((0, 0)),
        actions=np.asarray(actions, dtype=np.float64).reshape(n, 2),
        ticks=np.arange(n, dtype=np.int64),
        source=policy,
    )


def dataset_stats(trajectories) -> dict:
    """Mean length (m), mean command speed (m/s), and counts over a dataset."""
    trajectories = list(trajectories)
    lengths, speeds, steps = [], [], 0
    for t in trajectories:
        if len(t) == 0:
            continue
        lengths.append(float(np.sum(t.actions[:, 0]) * DT))
        speeds.append(float(np.mean(t.actions[:, 0])))
        steps += len(t)
    return {
        "n_trajectories": len(trajectories),
        "n_steps": steps,
        "mean_length_m": float(np.mean(lengths)) if lengths else 0.0,
        "mean_speed_mps": float(np.mean(speeds)) if speeds else 0.0,
    }
