"""Latent waypoint model: bottlenecked encoder, unit-Gaussian prior, and a
decoder predicting action, temporal distance, and frame-local GPS offset."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ..data import TrainingPair, rotate_from_frame
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
from ..sim import ActionCommand, EgocentricObservation

CLOSE_THRESHOLD_TICKS = 10.0
TARGET_DIM = 5  # (v, omega, distance, dx, dy)
# Heads regress unit-scaled targets so the five likelihood terms start out
# comparably conditioned; predictions are unscaled on the way out.
TARGET_SCALE = np.array([2.0, 1.5, 40.0, 20.0, 20.0])


@dataclass(frozen=True)
class WaypointPrediction:
    """Decoded head means for one latent (or real) waypoint."""

    action: ActionCommand
    temporal_distance: float      # ticks, clamped at 0
    offset_xy: np.ndarray         # robot frame of the origin pose
    z: np.ndarray
    origin_xy: np.ndarray
    predicted_xy: np.ndarray      # origin + world-frame rotation of offset


@dataclass(frozen=True)
class VibBatchLoss:
    total: float
    nll: float
    kl: float


def _features(obs) -> np.ndarray:
    return obs.features if isinstance(obs, EgocentricObservation) else np.asarray(obs)


class LatentGoalModel(BaseEstimator):
    """Local reachability model trained on step pairs with a KL bottleneck.

    fit() consumes TrainingPair batches; afterwards the model scores
    reachability between observations, proposes latent waypoints from the
    prior, and emits the next action toward a target.
    """

    def __init__(self, z_dim=16, beta=0.01, hidden=(128, 64), batch_size=128,
                 learning_rate=1e-4, steps=3000, seed=0,
                 close_threshold=CLOSE_THRESHOLD_TICKS, dedup_radius=2.0):
        self.z_dim = z_dim
        self.beta = beta
        self.hidden = hidden
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.steps = steps
        self.seed = seed
        self.close_threshold = close_threshold
        self.dedup_radius = dedup_radius

    # ---- construction helpers ----

    def _build(self, obs_dim: int) -> None:
        self.obs_dim_ = obs_dim
        self.encoder_spec_ = MlpSpec(
            (2 * obs_dim, *self.hidden, 2 * self.z_dim), "tanh",
            {"mu": (0, self.z_dim), "log_sigma": (self.z_dim, 2 * self.z_dim)})
        self.decoder_spec_ = MlpSpec(
            (obs_dim + self.z_dim, *self.hidden, 2 * TARGET_DIM), "tanh",
            {"mu": (0, TARGET_DIM), "log_sigma": (TARGET_DIM, 2 * TARGET_DIM)})
        self.encoder_params_ = init_mlp_params(self.encoder_spec_, self.seed)
        self.decoder_params_ = init_mlp_params(self.decoder_spec_, self.seed + 1)

    def _check_fitted(self):
        if not hasattr(self, "decoder_params_"):
            raise NotFittedError("LatentGoalModel is not fitted; call fit() or load()")

    def spec_hash(self) -> str:
        import hashlib
        blob = self.encoder_spec_.canonical_json() + self.decoder_spec_.canonical_json()
        return hashlib.sha256(blob.encode()).hexdigest()

    @staticmethod
    def _stack(pairs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pair_x = np.stack([np.concatenate([_features(p.obs_start),
                                           _features(p.obs_target)]) for p in pairs])
        obs_x = np.stack([_features(p.obs_start) for p in pairs])
        targets = np.stack([p.target_vector() for p in pairs]) / TARGET_SCALE
        return pair_x, obs_x, targets

    # ---- objective ----

    def _loss_vars(self, tape: GradTape, pair_x, obs_x, targets, eps):
        enc = mlp_forward(self.encoder_spec_, tape.params("enc"), pair_x)
        sigma_p = ad.exp(enc["log_sigma"])
        z = ad.reparam_sample(enc["mu"], sigma_p, eps=eps)
        dec_in = ad.concat_cols([ad.as_var(obs_x), z])
        dec = mlp_forward(self.decoder_spec_, tape.params("dec"), dec_in)
        sigma_q = ad.exp(dec["log_sigma"])
        nll = ad.mean_all(ad.gaussian_nll(dec["mu"], sigma_q, targets))
        kl = ad.mean_all(ad.kl_diag_gaussian(enc["mu"], sigma_p))
        total = ad.add(nll, ad.scale(kl, self.beta))
        return total, nll, kl

    def vib_loss(self, pairs, rng=None, eps=None) -> VibBatchLoss:
        """Mean objective over a batch (one latent sample per element)."""
        self._check_fitted()
        if not pairs:
            raise ValueError("batch must be nonempty")
        pair_x, obs_x, targets = self._stack(pairs)
        if eps is None:
            rng = rng or np.random.default_rng(self.seed)
            eps = rng.standard_normal((len(pairs), self.z_dim))
        tape = GradTape({"enc": self.encoder_params_, "dec": self.decoder_params_})
        total, nll, kl = self._loss_vars(tape, pair_x, obs_x, targets, eps)
        return VibBatchLoss(float(total.value), float(nll.value), float(kl.value))

    def loss_vars_for_check(self, tape: GradTape, pairs, eps):
        """Tape-level objective, exposed for finite-difference verification."""
        pair_x, obs_x, targets = self._stack(pairs)
        total, _, _ = self._loss_vars(tape, pair_x, obs_x, targets, eps)
        return total

    # ---- training ----

    def fit(self, pairs: list[TrainingPair], curve_path=None):
        if not pairs:
            raise ValueError("training set must be nonempty")
        self._build(_features(pairs[0].obs_start).size)
        pair_x, obs_x, targets = self._stack(pairs)
        rng = np.random.default_rng(self.seed)
        enc_state = AdamState.for_store(self.encoder_params_)
        dec_state = AdamState.for_store(self.decoder_params_)
        n = len(pairs)
        self.curve_ = []
        for step in range(self.steps):
            idx = rng.integers(0, n, size=min(self.batch_size, n))
            eps = rng.standard_normal((len(idx), self.z_dim))
            tape = GradTape({"enc": self.encoder_params_, "dec": self.decoder_params_})
            try:
                total, nll, kl = self._loss_vars(
                    tape, pair_x[idx], obs_x[idx], targets[idx], eps)
            except ValueError as e:  # sigma underflow after a parameter blow-up
                raise TrainingDiverged(
                    f"latent model loss undefined at step {step}: {e}") from e
            if not math.isfinite(float(total.value)):
                raise TrainingDiverged(
                    f"latent model loss became non-finite at step {step}")
            grads = tape.gradients(total)
            adam_step(self.encoder_params_, grads["enc"], enc_state, self.learning_rate)
            adam_step(self.decoder_params_, grads["dec"], dec_state, self.learning_rate)
            self.curve_.append((step, float(total.value), float(kl.value),
                                float(nll.value)))
        if curve_path is not None:
            from ..nn import write_curve_csv
            write_curve_csv(curve_path, self.curve_)
        return self

    # ---- inference ----

    def _encode_dist(self, obs_a, obs_b) -> tuple[np.ndarray, np.ndarray]:
        self._check_fitted()
        a = np.atleast_2d(_features(obs_a))
        b = np.atleast_2d(_features(obs_b))
        out = mlp_eval(self.encoder_spec_, self.encoder_params_,
                       np.concatenate([a, b], axis=1))
        return out["mu"], np.exp(out["log_sigma"])

    def encode(self, obs_start, obs_target, rng: np.random.Generator) -> np.ndarray:
        """One reparameterized latent draw for a real observation pair."""
        mu, sigma = self._encode_dist(obs_start, obs_target)
        return (mu + sigma * rng.standard_normal(mu.shape))[0]

    def _decode_heads(self, obs_x: np.ndarray, z: np.ndarray) -> np.ndarray:
        out = mlp_eval(self.decoder_spec_, self.decoder_params_,
                       np.concatenate([np.atleast_2d(obs_x), np.atleast_2d(z)], axis=1))
        return out["mu"] * TARGET_SCALE

    def decode(self, obs, z, origin_xy=(0.0, 0.0), heading: float = 0.0
               ) -> WaypointPrediction:
        """Head means for one latent against the current observation."""
        self._check_fitted()
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.z_dim,):
            raise ValueError(f"z must have dimension {self.z_dim}")
        mu = self._decode_heads(_features(obs), z)[0]
        origin = np.asarray(origin_xy, dtype=np.float64)
        offset = mu[3:5]
        return WaypointPrediction(
            action=ActionCommand(mu[0], mu[1]),
            temporal_distance=max(float(mu[2]), 0.0),
            offset_xy=offset,
            z=z,
            origin_xy=origin,
            predicted_xy=origin + rotate_from_frame(offset, heading),
        )

    def predict_transit(self, obs_start, obs_target, origin_xy=(0.0, 0.0),
                        heading: float = 0.0) -> WaypointPrediction:
        """Mean-latent prediction between two real observations."""
        mu, _ = self._encode_dist(obs_start, obs_target)
        return self.decode(obs_start, mu[0], origin_xy, heading)

    def temporal_distances(self, obs_start_batch: np.ndarray,
                           obs_target_batch: np.ndarray) -> np.ndarray:
        """Vectorized mean-latent distance predictions, clamped at 0."""
        self._check_fitted()
        a = np.atleast_2d(obs_start_batch)
        b = np.atleast_2d(obs_target_batch)
        enc = mlp_eval(self.encoder_spec_, self.encoder_params_,
                       np.concatenate([a, b], axis=1))
        mu = self._decode_heads(a, enc["mu"])
        return np.maximum(mu[:, 2], 0.0)

    def is_close(self, obs_a, obs_b, threshold: float | None = None) -> bool:
        """True iff the predicted transit time falls under the threshold."""
        eps = self.close_threshold if threshold is None else threshold
        if math.isinf(eps) and eps > 0:
            return True
        d = self.temporal_distances(_features(obs_a)[None, :],
                                    _features(obs_b)[None, :])[0]
        return bool(d < eps)

    def sample_waypoints(self, obs, origin_xy, heading: float, k: int,
                         rng: np.random.Generator) -> list[WaypointPrediction]:
        """Decode k prior draws; merge duplicates within the dedup radius."""
        self._check_fitted()
        if k < 1:
            raise ValueError("k must be >= 1")
        z = rng.standard_normal((k, self.z_dim))
        obs_x = np.tile(_features(obs)[None, :], (k, 1))
        mu = self._decode_heads(obs_x, z)
        origin = np.asarray(origin_xy, dtype=np.float64)
        out: list[WaypointPrediction] = []
        for row, zrow in zip(mu, z):
            offset = row[3:5]
            pred = origin + rotate_from_frame(offset, heading)
            if any(np.hypot(*(pred - w.predicted_xy)) < self.dedup_radius
                   for w in out):
                continue
            out.append(WaypointPrediction(
                action=ActionCommand(row[0], row[1]),
                temporal_distance=max(float(row[2]), 0.0),
                offset_xy=offset,
                z=zrow,
                origin_xy=origin,
                predicted_xy=pred,
            ))
        return out

    # ---- persistence ----

    def save(self, path) -> None:
        self._check_fitted()
        save_checkpoint(path, {"enc": self.encoder_params_,
                               "dec": self.decoder_params_},
                        self.spec_hash(),
                        meta={"params": self.get_params(),
                              "obs_dim": self.obs_dim_})

    @classmethod
    def load(cls, path) -> "LatentGoalModel":
        stores, meta, _ = load_checkpoint(path)
        model = cls(**meta["params"])
        model._build(meta["obs_dim"])
        for name, arr in stores["enc"].arrays.items():
            model.encoder_params_.assign(name, arr)
        for name, arr in stores["dec"].arrays.items():
            model.decoder_params_.assign(name, arr)
        return model
