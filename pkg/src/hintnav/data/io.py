"""Dataset persistence: line-delimited step records plus a manifest."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .collect import Trajectory, dataset_stats


def save_dataset(trajectories: list[Trajectory], path, worlds=None) -> Path:
    """Write one JSON record per step and a sidecar manifest; returns manifest path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        for tid, t in enumerate(trajectories):
            for k in range(len(t)):
                rec = {
                    "traj_id": tid,
                    "tick": int(t.ticks[k]),
                    "pose": t.poses[k].tolist(),
                    "gps": t.gps[k].tolist(),
                    "obs": t.obs[k].tolist(),
                    "action": t.actions[k].tolist(),
                }
                f.write(json.dumps(rec) + "\n")
    manifest = {
        "dataset": path.name,
        "sources": [t.source for t in trajectories],
        "worlds": worlds or [],
        "stats": dataset_stats(trajectories),
    }
    mpath = path.with_suffix(path.suffix + ".manifest.json")
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return mpath


def load_dataset(path) -> list[Trajectory]:
    path = Path(path)
    mpath = path.with_suffix(path.suffix + ".manifest.json")
    sources = None
    if mpath.exists():
        sources = json.loads(mpath.read_text())["sources"]
    rows: dict[int, list[dict]] = {}
    with path.open() as f:
        for line in f:
            rec = json.loads(line)
            rows.setdefault(rec["traj_id"], []).append(rec)
    out = []
    for tid in sorted(rows):
        recs = sorted(rows[tid], key=lambda r: r["tick"])
        out.append(Trajectory(
            poses=np.array([r["pose"] for r in recs], dtype=np.float64),
            gps=np.array([r["gps"] for r in recs], dtype=np.float64),
            obs=np.array([r["obs"] for r in recs], dtype=np.float64),
            actions=np.array([r["action"] for r in recs], dtype=np.float64),
            ticks=np.array([r["tick"] for r in recs], dtype=np.int64),
            source=sources[tid] if sources else "unknown",
        ))
    return out
