"""Procedural world generation and hint corruption."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import ConfigError, CorruptionRejected
from .types import (
    BORDER_MARGIN,
    FREE,
    OBSTACLE,
    RESOLUTION,
    SLOW,
    WORLD_SIZE,
    CorruptionSpec,
    WorldSpec,
)

WORLD_KINDS = ("open_field", "building_blocks", "trail_park", "canopy")
TRAIL_HALFWIDTH = 1.5
MIN_FREE_FRACTION = 0.40


def _stamp_rect(grid: np.ndarray, rect, resolution: float, value: int) -> None:
    x0, y0, x1, y1 = rect
    r0 = max(int(np.floor(y0 / resolution)), 0)
    r1 = min(int(np.ceil(y1 / resolution)), grid.shape[0])
    c0 = max(int(np.floor(x0 / resolution)), 0)
    c1 = min(int(np.ceil(x1 / resolution)), grid.shape[1])
    if r1 > r0 and c1 > c0:
        grid[r0:r1, c0:c1] = value


def _stamp_disk(grid: np.ndarray, x: float, y: float, radius: float,
                resolution: float, value: int) -> None:
    r0 = max(int((y - radius) / resolution), 0)
    r1 = min(int((y + radius) / resolution) + 1, grid.shape[0])
    c0 = max(int((x - radius) / resolution), 0)
    c1 = min(int((x + radius) / resolution) + 1, grid.shape[1])
    if r1 <= r0 or c1 <= c0:
        return
    rr, cc = np.mgrid[r0:r1, c0:c1]
    cys = (rr + 0.5) * resolution
    cxs = (cc + 0.5) * resolution
    mask = (cxs - x) ** 2 + (cys - y) ** 2 <= radius * radius
    grid[r0:r1, c0:c1][mask] = value


def _sample_polyline(points: np.ndarray, step: float) -> np.ndarray:
    """Densify a polyline so consecutive samples are at most `step` apart."""
    out = [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        seg = np.asarray(b) - np.asarray(a)
        length = float(np.hypot(*seg))
        n = max(int(np.ceil(length / step)), 1)
        for k in range(1, n + 1):
            out.append(np.asarray(a) + seg * (k / n))
    return np.asarray(out)


def _carve_trail(grid: np.ndarray, polyline: np.ndarray, resolution: float,
                 halfwidth: float = TRAIL_HALFWIDTH) -> None:
    for x, y in _sample_polyline(polyline, resolution / 2.0):
        _stamp_disk(grid, x, y, halfwidth, resolution, FREE)


def _trail_mask(shape, trails, resolution, halfwidth=TRAIL_HALFWIDTH) -> np.ndarray:
    mask = np.zeros(shape, dtype=np.uint8)
    for poly in trails:
        for x, y in _sample_polyline(poly, resolution / 2.0):
            _stamp_disk(mask, x, y, halfwidth, resolution, 1)
    return mask.astype(bool)


def _make_trail(rng: np.random.Generator, size: float, y_band: tuple[float, float],
                n_ctrl: int = 7) -> np.ndarray:
    """West-to-east polyline with jittered control points inside a y band."""
    lo, hi = y_band
    xs = np.linspace(BORDER_MARGIN + 4.0, size - BORDER_MARGIN - 4.0, n_ctrl)
    ys = rng.uniform(lo, hi, size=n_ctrl)
    ys[1:-1] = 0.5 * (ys[1:-1] + np.linspace(ys[0], ys[-1], n_ctrl)[1:-1])  # tame swings
    return np.column_stack([xs, ys])


def _synthesize_overhead(trav: np.ndarray, trails, resolution: float,
                         rng: np.random.Generator, fidelity: float,
                         noise_region=None) -> np.ndarray:
    """Three hint channels (roadness, buildingness, vegetation) from ground truth.

    Each channel mixes a blurred truth map with per-cell noise; fidelity 1.0
    is a clean map, 0.0 pure noise. `noise_region` (x0,y0,x1,y1) is replaced
    with uncorrelated noise outright.
    """
    road = _trail_mask(trav.shape, trails, resolution).astype(np.float64)
    building = (trav == OBSTACLE).astype(np.float64)
    veg = (trav == SLOW).astype(np.float64)
    chans = []
    for base in (road, building, veg):
        smooth = ndimage.uniform_filter(base, size=3)
        noise = rng.uniform(0.0, 1.0, size=base.shape)
        chans.append(np.clip(fidelity * smooth + (1.0 - fidelity) * noise, 0.0, 1.0))
    overhead = np.stack(chans, axis=-1)
    if noise_region is not None:
        x0, y0, x1, y1 = noise_region
        r0, r1 = int(y0 / resolution), int(np.ceil(y1 / resolution))
        c0, c1 = int(x0 / resolution), int(np.ceil(x1 / resolution))
        overhead[r0:r1, c0:c1, :] = rng.uniform(0.0, 1.0, size=overhead[r0:r1, c0:c1, :].shape)
    return overhead


def largest_component_fraction(trav: np.ndarray) -> float:
    """Fraction of all cells covered by the biggest non-obstacle component."""
    labels, n = ndimage.label(trav != OBSTACLE)
    if n == 0:
        return 0.0
    counts = np.bincount(labels.ravel())[1:]
    return float(counts.max()) / trav.size


def validate_world(w: WorldSpec) -> None:
    """Raise if a world violates its own invariants."""
    rows = int(round(w.bounds[1] / w.resolution))
    cols = int(round(w.bounds[0] / w.resolution))
    if w.traversability.shape != (rows, cols):
        raise ValueError("traversability raster does not match bounds/resolution")
    if w.overhead.shape[:2] != (rows, cols):
        raise ValueError("overhead raster does not match bounds/resolution")
    for poly in w.trails:
        for x, y in _sample_polyline(np.asarray(poly), w.resolution / 2.0):
            if w.cell_at(float(x), float(y)) != FREE:
                raise ValueError(f"trail point ({x:.2f}, {y:.2f}) is not on a free cell")
    frac = largest_component_fraction(w.traversability)
    if frac < MIN_FREE_FRACTION:
        raise ValueError(f"largest free component covers {frac:.2%} < 40% of cells")


def _border(trav: np.ndarray, resolution: float) -> None:
    m = max(int(BORDER_MARGIN / resolution), 1)
    trav[:m, :] = OBSTACLE
    trav[-m:, :] = OBSTACLE
    trav[:, :m] = OBSTACLE
    trav[:, -m:] = OBSTACLE


def _mottle(trav, rng, size, res, n_blobs, r_lo=1.0, r_hi=3.5):
    """Scatter slow-terrain blobs; texture for otherwise featureless ground."""
    for _ in range(n_blobs):
        mx, my = rng.uniform(0.04 * size, 0.96 * size, size=2)
        r = rng.uniform(r_lo, r_hi)
        patch_r0 = max(int((my - r) / res), 0)
        patch_r1 = min(int((my + r) / res) + 1, trav.shape[0])
        patch_c0 = max(int((mx - r) / res), 0)
        patch_c1 = min(int((mx + r) / res) + 1, trav.shape[1])
        block = trav[patch_r0:patch_r1, patch_c0:patch_c1]
        rr, cc = np.mgrid[patch_r0:patch_r1, patch_c0:patch_c1]
        mask = (((cc + 0.5) * res - mx) ** 2 + ((rr + 0.5) * res - my) ** 2
                <= r * r) & (block == FREE)
        block[mask] = SLOW


def _gen_building_blocks(trav, rng, size, res, regions):
    # Central dead-end pocket: three walls, opening to the west.
    t = 4.0
    cx = size * 0.5 + rng.uniform(-5.0, 5.0)
    cy = size * 0.5 + rng.uniform(-5.0, 5.0)
    pw, ph = 36.0, 28.0
    x0, x1 = cx - pw / 2, cx + pw / 2
    y0, y1 = cy - ph / 2, cy + ph / 2
    _stamp_rect(trav, (x0 - t, y1, x1 + t, y1 + t), res, OBSTACLE)
    _stamp_rect(trav, (x0 - t, y0 - t, x1 + t, y0), res, OBSTACLE)
    _stamp_rect(trav, (x1, y0 - t, x1 + t, y1 + t), res, OBSTACLE)
    regions["culdesac"] = (x0, y0, x1, y1)
    regions["culdesac_mouth"] = (x0, cy)
    pocket_clear = (x0 - t - 9.0, y0 - t - 9.0, x1 + t + 9.0, y1 + t + 9.0)

    # Jittered grid of buildings outside the pocket's clearance zone; keeps
    # streets narrow enough that walls stay inside the observation radius.
    spacing = 28.0
    for gy in np.arange(spacing / 2 + BORDER_MARGIN, size - spacing / 2, spacing):
        for gx in np.arange(spacing / 2 + BORDER_MARGIN, size - spacing / 2, spacing):
            bw = rng.uniform(12.0, 18.0)
            bh = rng.uniform(12.0, 18.0)
            bx = gx + rng.uniform(-3.0, 3.0)
            by = gy + rng.uniform(-3.0, 3.0)
            rect = (bx - bw / 2, by - bh / 2, bx + bw / 2, by + bh / 2)
            if (rect[2] > pocket_clear[0] and rect[0] < pocket_clear[2]
                    and rect[3] > pocket_clear[1] and rect[1] < pocket_clear[3]):
                continue
            _stamp_rect(trav, rect, res, OBSTACLE)
    _mottle(trav, rng, size, res, n_blobs=240)
    return []


def _gen_trail_park(trav, rng, size, res, regions):
    # Meadow patches read as slow terrain.
    for _ in range(8):
        mx, my = rng.uniform(0.15 * size, 0.85 * size, size=2)
        _stamp_disk(trav, mx, my, rng.uniform(8.0, 18.0), res, SLOW)
    _mottle(trav, rng, size, res, n_blobs=160)
    # Scattered tree clusters.
    for _ in range(45):
        tx, ty = rng.uniform(0.05 * size, 0.95 * size, size=2)
        _stamp_disk(trav, tx, ty, rng.uniform(1.0, 2.5), res, OBSTACLE)
    trails = [
        _make_trail(rng, size, (0.25 * size, 0.45 * size)),
        _make_trail(rng, size, (0.55 * size, 0.75 * size)),
    ]
    for poly in trails:
        _carve_trail(trav, poly, res)
    return trails


def _gen_canopy(trav, rng, size, res, regions):
    region = (0.35 * size, 0.15 * size, 0.65 * size, 0.85 * size)
    regions["canopy"] = region
    _mottle(trav, rng, size, res, n_blobs=160)
    for _ in range(60):
        tx = rng.uniform(region[0] + 2.0, region[2] - 2.0)
        ty = rng.uniform(region[1] + 2.0, region[3] - 2.0)
        _stamp_disk(trav, tx, ty, rng.uniform(0.8, 2.0), res, OBSTACLE)
    for _ in range(15):
        tx, ty = rng.uniform(0.05 * size, 0.95 * size, size=2)
        _stamp_disk(trav, tx, ty, rng.uniform(1.0, 2.2), res, OBSTACLE)
    trails = [_make_trail(rng, size, (0.4 * size, 0.6 * size))]
    for poly in trails:
        _carve_trail(trav, poly, res)
    return trails


def generate_world(seed: int, kind: str, size: float = WORLD_SIZE,
                   resolution: float = RESOLUTION,
                   hint_fidelity: float = 0.9) -> WorldSpec:
    """Deterministic world for a (seed, kind) pair; validated before return."""
    if kind not in WORLD_KINDS:
        raise ConfigError(f"unknown world kind {kind!r}; expected one of {WORLD_KINDS}")
    rng = np.random.default_rng([int(seed), WORLD_KINDS.index(kind)])
    n = int(round(size / resolution))
    trav = np.full((n, n), FREE, dtype=np.uint8)
    regions: dict = {}
    trails: list[np.ndarray] = []
    if kind == "building_blocks":
        trails = _gen_building_blocks(trav, rng, size, resolution, regions)
    elif kind == "trail_park":
        trails = _gen_trail_park(trav, rng, size, resolution, regions)
    elif kind == "canopy":
        trails = _gen_canopy(trav, rng, size, resolution, regions)
    _border(trav, resolution)
    noise_region = regions.get("canopy")
    overhead = _synthesize_overhead(trav, trails, resolution, rng,
                                    hint_fidelity, noise_region)
    world = WorldSpec(
        bounds=(size, size),
        resolution=resolution,
        traversability=trav,
        overhead=overhead,
        trails=trails,
        seed=int(seed),
        kind=kind,
        regions=regions,
    )
    validate_world(world)
    return world


def _connected(trav: np.ndarray, resolution: float, a, b) -> bool:
    labels, _ = ndimage.label(trav != OBSTACLE)
    ra, ca = int(a[1] / resolution), int(a[0] / resolution)
    rb, cb = int(b[1] / resolution), int(b[0] / resolution)
    la, lb = labels[ra, ca], labels[rb, cb]
    return la != 0 and la == lb


def apply_corruption(w: WorldSpec, c: CorruptionSpec | None,
                     require_connected=None) -> WorldSpec:
    """Realize a corruption spec against a world.

    Outdated mode stamps the added obstacles into traversability only (the
    overhead raster keeps showing the pre-obstacle scene); offset mode leaves
    rasters untouched (the shift happens at crop time). `require_connected`
    is an optional ((x, y), (x, y)) pair that must stay connected, else the
    corruption is rejected; without it the 40% free-component floor applies.
    """
    if c is None or c.mode in ("none", "offset"):
        return w
    trav = w.traversability.copy()
    for rect in c.added_obstacles:
        _stamp_rect(trav, rect, w.resolution, OBSTACLE)
    if require_connected is not None:
        a, b = require_connected
        if not _connected(trav, w.resolution, a, b):
            raise CorruptionRejected("added obstacles disconnect the designated points")
    elif largest_component_fraction(trav) < MIN_FREE_FRACTION:
        raise CorruptionRejected("added obstacles break the free-component floor")
    return WorldSpec(
        bounds=w.bounds,
        resolution=w.resolution,
        traversability=trav,
        overhead=w.overhead,
        trails=w.trails,
        seed=w.seed,
        kind=w.kind,
        regions=dict(w.regions),
    )
