"""Experiment configuration: one JSON-serializable dataclass drives the
whole generate -> collect -> train -> search -> evaluate pipeline."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from ..errors import ConfigError
from ..sim import OBSTACLE, CorruptionSpec, WorldSpec

VARIANTS = ("full", "gps_only", "uninformed")
VARIANT_HEURISTIC = {"full": "learned", "gps_only": "gps_l2", "uninformed": "none"}

# straight-line range buckets, scaled 4x down from kilometer-scale field work
BUCKETS = {"easy": (0.0, 12.5), "medium": (12.5, 37.5), "hard": (37.5, 125.0)}

OUTPUT_ROOT_ENV = "HINTNAV_OUT"


@dataclass
class ExperimentConfig:
    # world under evaluation
    world_kind: str = "building_blocks"
    world_seed: int = 0
    hint_fidelity: float = 0.9
    # hint corruption
    corruption_mode: str = "none"
    corruption_offset: tuple = (0.0, 0.0)
    corruption_obstacles: tuple = ()
    # training data (collected on held-out seeds of the same kind)
    train_world_seeds: tuple = (9001, 9002)
    n_random_walk: int = 60
    n_trail_follow: int = 0
    collect_seed: int = 123
    n_pairs: int = 20000
    # model hyperparameters (constructor overrides)
    latent: dict = field(default_factory=dict)
    heuristic: dict = field(default_factory=dict)
    # search
    variant: str = "full"
    search: dict = field(default_factory=dict)
    search_seed: int = 0
    # goal placement: explicit coordinates or a sampled range bucket
    start_xy: tuple | None = None
    goal_xy: tuple | None = None
    goal_bucket: str | None = "medium"
    goal_seed: int = 0
    # artifacts
    out_dir: str = "runs/experiment"
    checkpoint_dir: str | None = None
    train_if_missing: bool = True
    emit_plots: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.goal_bucket is not None and self.goal_bucket not in BUCKETS:
            raise ConfigError(f"goal_bucket must be one of {tuple(BUCKETS)}")
        if self.goal_xy is None and self.goal_bucket is None:
            raise ConfigError("provide goal_xy or goal_bucket")
        if self.corruption_mode not in ("none", "outdated", "offset"):
            raise ConfigError(f"unknown corruption mode {self.corruption_mode!r}")

    @property
    def heuristic_kind(self) -> str:
        return VARIANT_HEURISTIC[self.variant]

    def corruption(self) -> CorruptionSpec | None:
        if self.corruption_mode == "none":
            return None
        return CorruptionSpec(
            mode=self.corruption_mode,
            offset_vector=tuple(self.corruption_offset),
            added_obstacles=tuple(tuple(r) for r in self.corruption_obstacles),
        )

    def resolved_out_dir(self) -> Path:
        root = os.environ.get(OUTPUT_ROOT_ENV)
        p = Path(self.out_dir)
        if root and not p.is_absolute():
            return Path(root) / p
        return p

    # ---- serialization ----

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(self.to_json())

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(data)


def sample_start_goal(world: WorldSpec, bucket: str, rng: np.random.Generator,
                      max_tries: int = 4000):
    """Start/goal in the same free component at a bucketed straight-line range."""
    lo, hi = BUCKETS[bucket]
    labels, _ = ndimage.label(world.traversability != OBSTACLE)
    from ..data import sample_free_pose
    for _ in range(max_tries):
        a = sample_free_pose(world, rng)
        b = sample_free_pose(world, rng)
        d = np.hypot(a.x - b.x, a.y - b.y)
        if not (lo <= d <= hi):
            continue
        ra, ca = world.cell_index(a.x, a.y)
        rb, cb = world.cell_index(b.x, b.y)
        if labels[ra, ca] == labels[rb, cb] != 0:
            return a, np.array([b.x, b.y])
    raise ConfigError(f"could not sample a {bucket}-range start/goal pair")
