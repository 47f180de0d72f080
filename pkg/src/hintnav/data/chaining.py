"""Macro-trajectory chaining and contrastive batch sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..sim import CorruptionSpec, GpsReading, OverheadCrop, WorldSpec, overhead_crop
from .collect import Trajectory

INTERSECT_RADIUS = 4.0  # meters; about the GPS noise scale


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass
class MacroGroup:
    """Trajectories merged through chains of pairwise spatial intersections."""

    traj_ids: tuple[int, ...]
    trajectories: dict[int, Trajectory]
    links: list[tuple[int, int, int, int]] = field(default_factory=list)
    # links: (traj_a, idx_a, traj_b, idx_b) witness step pairs within radius

    def __len__(self) -> int:
        return len(self.traj_ids)

    @property
    def total_steps(self) -> int:
        return sum(len(t) for t in self.trajectories.values())

    @property
    def entry_exit_points(self) -> np.ndarray:
        """Endpoints of every member trajectory (GPS), shape (2*members, 2)."""
        pts = []
        for tid in self.traj_ids:
            t = self.trajectories[tid]
            if len(t):
                pts.append(t.gps[0])
                pts.append(t.gps[-1])
        return np.asarray(pts).reshape(-1, 2)

    def neighbors(self) -> dict[int, list[tuple[int, int, int]]]:
        """Adjacency over member ids: tid -> [(other, idx_here, idx_there)]."""
        adj: dict[int, list[tuple[int, int, int]]] = {t: [] for t in self.traj_ids}
        for a, ia, b, ib in self.links:
            adj[a].append((b, ia, ib))
            adj[b].append((a, ib, ia))
        return adj


def _witness(tree_a: cKDTree, traj_b: Trajectory, r: float):
    """First (idx_a, idx_b) step pair within r, or None."""
    hits = tree_a.query_ball_point(traj_b.gps, r)
    for ib, lst in enumerate(hits):
        if lst:
            return min(lst), ib
    return None


def chain_trajectories(batch: list[Trajectory], r_int: float = INTERSECT_RADIUS
                       ) -> list[MacroGroup]:
    """Group trajectories by the transitive closure of 2D intersection.

    Two trajectories intersect iff some GPS step pair lies within r_int;
    groups are the connected components (union-find), so the result is a
    partition of the batch and independent of input order.
    """
    if r_int <= 0:
        raise ValueError("r_int must be positive")
    n = len(batch)
    trees = [cKDTree(t.gps) if len(t) else None for t in batch]
    uf = _UnionFind(n)
    links: list[tuple[int, int, int, int]] = []
    for a in range(n):
        if trees[a] is None:
            continue
        for b in range(a + 1, n):
            if trees[b] is None:
                continue
            w = _witness(trees[a], batch[b], r_int)
            if w is not None:
                uf.union(a, b)
                links.append((a, w[0], b, w[1]))
    members: dict[int, list[int]] = {}
    for k in range(n):
        members.setdefault(uf.find(k), []).append(k)
    groups = []
    for root in sorted(members):
        ids = tuple(sorted(members[root]))
        id_set = set(ids)
        groups.append(MacroGroup(
            traj_ids=ids,
            trajectories={t: batch[t] for t in ids},
            links=[l for l in links if l[0] in id_set and l[2] in id_set],
        ))
    return groups


@dataclass(frozen=True)
class ContrastiveSample:
    """One anchored classification instance for heuristic training."""

    start_xy: np.ndarray      # sub-path start (the conditioning location)
    end_xy: np.ndarray        # sub-path end (the goal stand-in)
    crop: OverheadCrop        # overhead window centered at start_xy
    positive_xy: np.ndarray   # a step on the connecting sub-path
    negatives_xy: np.ndarray  # (N_neg, 2) steps from other trajectories


def _bfs_path(adj, a: int, b: int) -> list[int]:
    if a == b:
        return [a]
    prev = {a: None}
    queue = [a]
    while queue:
        cur = queue.pop(0)
        for nxt, _, _ in adj[cur]:
            if nxt not in prev:
                prev[nxt] = cur
                if nxt == b:
                    path = [b]
                    while prev[path[-1]] is not None:
                        path.append(prev[path[-1]])
                    return path[::-1]
                queue.append(nxt)
    raise RuntimeError("group link graph is not connected")


def _chain_steps(group: MacroGroup, rng: np.random.Generator):
    """A sub-path through the group: list of (traj_id, step_idx), len >= 2."""
    ids = group.traj_ids
    a = int(ids[rng.integers(len(ids))])
    b = int(ids[rng.integers(len(ids))])
    adj = group.neighbors()
    chain = _bfs_path(adj, a, b)
    link_at = {}
    for k in range(len(chain) - 1):
        for nxt, ih, it in adj[chain[k]]:
            if nxt == chain[k + 1]:
                link_at[k] = (ih, it)
                break
    seq: list[tuple[int, int]] = []
    for k, tid in enumerate(chain):
        traj = group.trajectories[tid]
        n = len(traj)
        start = int(rng.integers(n)) if k == 0 else link_at[k - 1][1]
        stop = int(rng.integers(n)) if k == len(chain) - 1 else link_at[k][0]
        step = 1 if stop >= start else -1
        for idx in range(start, stop + step, step):
            seq.append((tid, idx))
    return seq


def sample_contrastive_batch(groups: list[MacroGroup], w: WorldSpec,
                             c: CorruptionSpec | None, B: int,
                             N_neg: int | None, rng: np.random.Generator,
                             local_negative_frac: float = 0.5,
                             local_radius: float = 40.0,
                             ) -> list[ContrastiveSample]:
    """Draw B anchored samples; negatives come from outside each sub-path.

    N_neg None defaults to B - 1 (within-batch convention). Positives are
    uniform steps on a sub-path through one macro group, so chained groups
    yield start/end pairs spanning different trajectories. A fraction of the
    negatives is drawn from other-trajectory steps near the anchor, which
    forces the classifier to discriminate among nearby candidates (the
    comparison the planner actually makes).
    """
    if N_neg is None:
        N_neg = B - 1
    if N_neg < 1:
        raise ValueError("need at least one negative per sample")
    eligible = [g for g in groups if g.total_steps >= 2]
    if not eligible:
        raise ValueError("no group with a path of >= 2 steps")
    weights = np.array([g.total_steps for g in eligible], dtype=np.float64)
    weights /= weights.sum()

    all_ids, all_xy = [], []
    for g in groups:
        for tid in g.traj_ids:
            t = g.trajectories[tid]
            all_ids.append(np.full(len(t), tid))
            all_xy.append(t.gps)
    pool_ids = np.concatenate(all_ids) if all_ids else np.zeros(0, dtype=int)
    pool_xy = np.concatenate(all_xy).reshape(-1, 2) if all_xy else np.zeros((0, 2))

    out = []
    for _ in range(B):
        seq = None
        group = eligible[int(rng.choice(len(eligible), p=weights))]
        for _attempt in range(20):
            cand = _chain_steps(group, rng)
            if len(cand) >= 2:
                seq = cand
                break
        if seq is None:
            raise RuntimeError("could not draw a sub-path of >= 2 steps")
        chain_set = {tid for tid, _ in seq}
        mask = ~np.isin(pool_ids, list(chain_set))
        if not mask.any():
            raise ValueError("no trajectory outside the sub-path to draw negatives from")
        neg_pool = pool_xy[mask]

        xy = lambda tid, idx: group.trajectories[tid].gps[idx]  # noqa: E731
        start = xy(*seq[0])
        end = xy(*seq[-1])
        pos = xy(*seq[int(rng.integers(len(seq)))])

        n_local = int(round(local_negative_frac * N_neg))
        near = np.hypot(*(neg_pool - start).T) <= local_radius
        negs = []
        if n_local and near.any():
            local_pool = neg_pool[near]
            negs.append(local_pool[rng.integers(0, len(local_pool),
                                                size=n_local)])
        else:
            n_local = 0
        negs.append(neg_pool[rng.integers(0, len(neg_pool),
                                          size=N_neg - n_local)])
        out.append(ContrastiveSample(
            start_xy=start,
            end_xy=end,
            crop=overhead_crop(w, c, GpsReading(start[0], start[1])),
            positive_xy=pos,
            negatives_xy=np.concatenate(negs, axis=0),
        ))
    return out
