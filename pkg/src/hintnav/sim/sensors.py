"""Simulated sensing: noisy GPS, egocentric patches, overhead crops."""

from __future__ import annotations

import math

import numpy as np

from .types import (
    CROP_CELLS,
    CROP_PAD,
    CROP_WINDOW,
    GPS_SIGMA,
    OBS_CELLS,
    OBS_RADIUS,
    CorruptionSpec,
    EgocentricObservation,
    GpsReading,
    OverheadCrop,
    Pose,
    WorldSpec,
)

_OFFSET_CACHE: dict = {}


def _patch_offsets(radius: float, cells: int) -> tuple[np.ndarray, np.ndarray]:
    """Robot-frame (forward, lateral) sample offsets for the patch grid."""
    key = (radius, cells)
    if key not in _OFFSET_CACHE:
        step = 2.0 * radius / cells
        centers = -radius + (np.arange(cells) + 0.5) * step
        fwd, lat = np.meshgrid(centers, centers, indexing="xy")
        _OFFSET_CACHE[key] = (fwd, lat)
    return _OFFSET_CACHE[key]


def sense_gps(w: WorldSpec, p: Pose, rng: np.random.Generator,
              sigma: float = GPS_SIGMA) -> GpsReading:
    """True position plus isotropic Gaussian noise (sigma in meters)."""
    noise = rng.normal(0.0, sigma, size=2) if sigma > 0 else np.zeros(2)
    return GpsReading(p.x + noise[0], p.y + noise[1])


def observe(w: WorldSpec, p: Pose, radius: float = OBS_RADIUS,
            cells: int = OBS_CELLS) -> EgocentricObservation:
    """Robot-frame traversability patch, nearest-cell sampled, plus heading cells.

    Patch values: free 0.0, slow 0.5, obstacle 1.0; out-of-bounds reads 1.0.
    """
    fwd, lat = _patch_offsets(radius, cells)
    c, s = math.cos(p.heading), math.sin(p.heading)
    xs = p.x + c * fwd - s * lat
    ys = p.y + s * fwd + c * lat
    res = w.resolution
    rows = np.floor(ys / res).astype(np.int64)
    cols = np.floor(xs / res).astype(np.int64)
    inside = (rows >= 0) & (rows < w.rows) & (cols >= 0) & (cols < w.cols)
    patch = np.ones((cells, cells), dtype=np.float64)
    patch[inside] = w.traversability[rows[inside], cols[inside]] * 0.5
    feats = np.concatenate([patch.ravel(), [c, s]])
    return EgocentricObservation(feats)


def overhead_crop(w: WorldSpec, c: CorruptionSpec | None, g: GpsReading,
                  window: float = CROP_WINDOW, cells: int = CROP_CELLS,
                  pad: float = CROP_PAD) -> OverheadCrop:
    """Axis-aligned overhead window around a GPS coordinate.

    Cell [cells//2, cells//2] samples exactly at the (possibly offset) center.
    Offset mode shifts the sampled center; outdated mode needs no handling
    here because the stored overhead raster is the pre-obstacle one.
    """
    cx, cy = g.x, g.y
    if c is not None and c.mode == "offset":
        cx += c.offset_vector[0]
        cy += c.offset_vector[1]
    stride = window / cells
    idx = np.arange(cells) - cells // 2
    xs = cx + idx[None, :] * stride
    ys = cy + idx[:, None] * stride
    res = w.resolution
    rows = np.floor(ys / res).astype(np.int64)
    cols = np.floor(xs / res).astype(np.int64)
    rows, cols = np.broadcast_arrays(rows, cols)
    inside = (rows >= 0) & (rows < w.rows) & (cols >= 0) & (cols < w.cols)
    feats = np.full((cells, cells, w.overhead.shape[2]), pad, dtype=np.float64)
    feats[inside] = w.overhead[rows[inside], cols[inside]]
    return OverheadCrop(feats, GpsReading(cx, cy))
