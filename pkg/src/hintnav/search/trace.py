"""Replayable search traces as line-delimited records."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..sim import DT, ActionCommand, Pose, step_dynamics


class SearchTrace:
    """Append-only event log; per-tick records make the run replayable."""

    def __init__(self):
        self.records: list[dict] = []

    def add(self, rtype: str, **payload) -> None:
        rec = {"type": rtype}
        rec.update(payload)
        self.records.append(rec)

    def of_type(self, rtype: str) -> list[dict]:
        return [r for r in self.records if r["type"] == rtype]

    # ---- derived views ----

    @property
    def tick_count(self) -> int:
        return len(self.of_type("tick"))

    def actions(self) -> np.ndarray:
        return np.array([r["action"] for r in self.of_type("tick")],
                        dtype=np.float64).reshape(-1, 2)

    def poses(self) -> np.ndarray:
        """Pose after each executed tick."""
        return np.array([r["pose"] for r in self.of_type("tick")],
                        dtype=np.float64).reshape(-1, 3)

    def start_pose(self) -> Pose:
        rec = self.of_type("start")[0]
        return Pose(*rec["pose"])

    def path_meters(self) -> float:
        acts = self.actions()
        return float(np.sum(acts[:, 0]) * DT) if len(acts) else 0.0

    def replay_poses(self) -> np.ndarray:
        """Re-integrate the executed actions; must reproduce `poses` exactly."""
        pose = self.start_pose()
        out = []
        for v, w in self.actions():
            pose = step_dynamics(pose, ActionCommand(v, w))
            out.append([pose.x, pose.y, pose.heading])
        return np.array(out, dtype=np.float64).reshape(-1, 3)

    def outcome(self) -> dict | None:
        recs = self.of_type("outcome")
        return recs[-1] if recs else None

    # ---- persistence ----

    def to_jsonl(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as f:
            for rec in self.records:
                f.write(json.dumps(rec) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "SearchTrace":
        trace = cls()
        with Path(path).open() as f:
            for line in f:
                trace.records.append(json.loads(line))
        return trace
