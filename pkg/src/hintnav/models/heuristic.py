"""Overhead-map heuristic: a contrastively trained on-path probability
estimator and the plain GPS fallback."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ..data import MacroGroup, sample_contrastive_batch
from ..errors import TrainingDiverged
from ..nn import (
    AdamState,
    GradTape,
    MlpSpec,
    adam_step,
    init_mlp_params,
    load_checkpoint,
    mlp_eval,
    mlp_forward,
    save_checkpoint,
)
from ..nn import autodiff as ad
from ..sim import (
    CROP_CELLS,
    CROP_CHANNELS,
    CROP_WINDOW,
    DT,
    V_MAX,
    CorruptionSpec,
    OverheadCrop,
    WorldSpec,
)

LAMBDA_OVER = 200.0
METERS_TO_TICKS = 1.0 / (V_MAX * DT)  # GPS heuristic scale: meters -> ticks


@dataclass(frozen=True)
class HeuristicQuery:
    """One candidate evaluation: all coordinates share the world frame."""

    waypoint_xy: np.ndarray
    goal_xy: np.ndarray
    current_xy: np.ndarray
    crop: OverheadCrop  # centered at the current location


def gps_cost(waypoint_xy, goal_xy, scale: float = METERS_TO_TICKS) -> float:
    """Scaled straight-line distance; the hint-free fallback heuristic."""
    d = np.asarray(goal_xy, dtype=np.float64) - np.asarray(waypoint_xy, dtype=np.float64)
    return float(scale * np.hypot(d[0], d[1]))


class OverheadHeuristic(BaseEstimator):
    """On-path probability model over (crop, waypoint, goal, current) queries.

    Trained with a softmax cross-entropy over one on-path positive and
    sampled off-path negatives per anchored sub-path; at plan time the cost
    is lambda_over * (1 - p).
    """

    def __init__(self, lambda_over=LAMBDA_OVER, crop_hidden=(128, 32),
                 fusion_hidden=(512, 128, 32), batch_size=256,
                 n_negatives=None, learning_rate=1e-4, steps=2000, seed=0,
                 coord_scale=CROP_WINDOW / 2.0,
                 crop_cells=CROP_CELLS, crop_channels=CROP_CHANNELS,
                 logit_l2=1e-3):
        self.lambda_over = lambda_over
        self.crop_hidden = crop_hidden
        self.fusion_hidden = fusion_hidden
        self.batch_size = batch_size
        self.n_negatives = n_negatives
        self.learning_rate = learning_rate
        self.steps = steps
        self.seed = seed
        self.coord_scale = coord_scale
        self.crop_cells = crop_cells
        self.crop_channels = crop_channels
        self.logit_l2 = logit_l2

    # ---- construction ----

    def _build(self) -> None:
        crop_dim = self.crop_cells * self.crop_cells * self.crop_channels
        self.crop_spec_ = MlpSpec((crop_dim, *self.crop_hidden), "tanh")
        self.fusion_spec_ = MlpSpec(
            (self.crop_hidden[-1] + 6, *self.fusion_hidden, 1), "tanh")
        self.crop_params_ = init_mlp_params(self.crop_spec_, self.seed)
        self.fusion_params_ = init_mlp_params(self.fusion_spec_, self.seed + 1)

    def _check_fitted(self):
        if not hasattr(self, "fusion_params_"):
            raise NotFittedError("OverheadHeuristic is not fitted; call fit() or load()")

    def spec_hash(self) -> str:
        import hashlib
        blob = self.crop_spec_.canonical_json() + self.fusion_spec_.canonical_json()
        return hashlib.sha256(blob.encode()).hexdigest()

    def _coords(self, current_xy, goal_xy, candidates: np.ndarray) -> np.ndarray:
        cur = np.asarray(current_xy, dtype=np.float64)
        goal = np.asarray(goal_xy, dtype=np.float64)
        cand = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
        s = self.coord_scale
        return np.column_stack([
            (cand - cur) / s,
            np.tile((goal - cur) / s, (len(cand), 1)),
            (goal - cand) / s,
        ])

    # ---- objective ----

    def _logit_vars(self, tape: GradTape, crops: np.ndarray, coords: np.ndarray,
                    per_row: int) -> ad.Var:
        """Logits (B, per_row) for B crops with per_row candidates each."""
        code = mlp_forward(self.crop_spec_, tape.params("crop"), crops)["out"]
        code_rep = ad.repeat_rows(code, per_row)
        fused = ad.concat_cols([code_rep, ad.as_var(coords)])
        logit = mlp_forward(self.fusion_spec_, tape.params("fusion"), fused)["out"]
        return ad.reshape(logit, (crops.shape[0], per_row))

    def _batch_arrays(self, samples):
        crops = np.stack([s.crop.features.ravel() for s in samples])
        coords = []
        for s in samples:
            candidates = np.vstack([s.positive_xy[None, :], s.negatives_xy])
            coords.append(self._coords(s.start_xy, s.end_xy, candidates))
        per_row = coords[0].shape[0]
        return crops, np.concatenate(coords, axis=0), per_row

    def contrastive_loss_vars(self, tape: GradTape, samples) -> ad.Var:
        """Mean softmax cross-entropy with the positive at index 0 per row.

        A small mean-square penalty anchors the logit cloud near zero: the
        contrastive term only constrains differences, and free-floating
        logits would saturate the sigmoid that turns scores into costs.
        """
        crops, coords, per_row = self._batch_arrays(samples)
        logits = self._logit_vars(tape, crops, coords, per_row)
        pos = np.zeros(len(samples), dtype=np.int64)
        nce = ad.mean_all(ad.infonce_loss(logits, pos))
        if self.logit_l2 > 0:
            return ad.add(nce, ad.scale(ad.mean_all(ad.square(logits)),
                                        self.logit_l2))
        return nce

    # ---- training ----

    def fit(self, groups: list[MacroGroup], world: WorldSpec,
            corruption: CorruptionSpec | None = None, curve_path=None):
        n_neg = self.batch_size - 1 if self.n_negatives is None else self.n_negatives
        if n_neg < 1:
            raise ValueError("training needs at least one negative per sample")
        self._build()
        rng = np.random.default_rng(self.seed)
        crop_state = AdamState.for_store(self.crop_params_)
        fusion_state = AdamState.for_store(self.fusion_params_)
        self.curve_ = []
        for step in range(self.steps):
            samples = sample_contrastive_batch(
                groups, world, corruption, self.batch_size, n_neg, rng)
            tape = GradTape({"crop": self.crop_params_, "fusion": self.fusion_params_})
            loss = self.contrastive_loss_vars(tape, samples)
            if not math.isfinite(float(loss.value)):
                raise TrainingDiverged(
                    f"heuristic loss became non-finite at step {step}")
            grads = tape.gradients(loss)
            adam_step(self.crop_params_, grads["crop"], crop_state, self.learning_rate)
            adam_step(self.fusion_params_, grads["fusion"], fusion_state,
                      self.learning_rate)
            self.curve_.append((step, float(loss.value)))
        if curve_path is not None:
            from ..nn import write_curve_csv
            write_curve_csv(curve_path, self.curve_, columns=("step", "loss"))
        return self

    # ---- inference ----

    def logits(self, crop: OverheadCrop, current_xy, goal_xy,
               candidates: np.ndarray) -> np.ndarray:
        """Raw scores for candidate waypoints sharing one crop anchor."""
        self._check_fitted()
        code = mlp_eval(self.crop_spec_, self.crop_params_,
                        crop.features.ravel()[None, :])["out"]
        cand = np.atleast_2d(candidates)
        coords = self._coords(current_xy, goal_xy, cand)
        fused = np.concatenate([np.repeat(code, len(cand), axis=0), coords], axis=1)
        return mlp_eval(self.fusion_spec_, self.fusion_params_, fused)["out"][:, 0]

    def score_probability(self, query: HeuristicQuery) -> float:
        """Sigmoid of the fused logit; strictly inside (0, 1)."""
        logit = self.logits(query.crop, query.current_xy, query.goal_xy,
                            query.waypoint_xy[None, :])[0]
        return float(1.0 / (1.0 + np.exp(-logit)))

    def cost(self, query: HeuristicQuery) -> float:
        return self.lambda_over * (1.0 - self.score_probability(query))

    def costs(self, crop: OverheadCrop, current_xy, goal_xy,
              candidates: np.ndarray) -> np.ndarray:
        """Vectorized cost for many candidates against one crop anchor."""
        logit = self.logits(crop, current_xy, goal_xy, candidates)
        return self.lambda_over * (1.0 - 1.0 / (1.0 + np.exp(-logit)))

    # ---- persistence ----

    def save(self, path) -> None:
        self._check_fitted()
        save_checkpoint(path, {"crop": self.crop_params_,
                               "fusion": self.fusion_params_},
                        self.spec_hash(), meta={"params": self.get_params()})

    @classmethod
    def load(cls, path) -> "OverheadHeuristic":
        stores, meta, _ = load_checkpoint(path)
        model = cls(**meta["params"])
        model._build()
        for name, arr in stores["crop"].arrays.items():
            model.crop_params_.assign(name, arr)
        for name, arr in stores["fusion"].arrays.items():
            model.fusion_params_.assign(name, arr)
        return model


def export_cost_heatmap(model: OverheadHeuristic, world: WorldSpec,
                        corruption: CorruptionSpec | None, current_xy, goal_xy,
                        path, stride_m: float = 4.0) -> np.ndarray:
    """CSV grid of heuristic cost over candidate positions; returns the grid."""
    from pathlib import Path

    from ..sim import GpsReading, overhead_crop

    crop = overhead_crop(world, corruption, GpsReading(*np.asarray(current_xy)))
    xs = np.arange(stride_m / 2, world.bounds[0], stride_m)
    ys = np.arange(stride_m / 2, world.bounds[1], stride_m)
    gx, gy = np.meshgrid(xs, ys)
    cand = np.column_stack([gx.ravel(), gy.ravel()])
    grid = model.costs(crop, current_xy, goal_xy, cand).reshape(len(ys), len(xs))
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(p, grid, fmt="%.6f", delimiter=",")
    return grid
