"""World serialization: VKW1 binary container and CSV raster export."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .types import WorldSpec

MAGIC = b"VKW1"
_HEADER = struct.Struct("<dddIq")  # width, height, resolution, channels, seed


def save_world(w: WorldSpec, path) -> None:
    path = Path(path)
    rows, cols = w.traversability.shape
    with path.open("wb") as f:
        f.write(MAGIC)
        f.write(_HEADER.pack(w.bounds[0], w.bounds[1], w.resolution,
                             w.overhead.shape[2], w.seed))
        f.write(np.ascontiguousarray(w.traversability, dtype=np.uint8).tobytes())
        f.write(np.ascontiguousarray(w.overhead, dtype=np.float64).tobytes())
        meta = {
            "kind": w.kind,
            "regions": {k: list(v) if not isinstance(v, str) else v
                        for k, v in w.regions.items()},
        }
        blob = json.dumps(meta, sort_keys=True).encode()
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(w.trails)))
        for poly in w.trails:
            pts = np.ascontiguousarray(np.asarray(poly, dtype=np.float64))
            f.write(struct.pack("<I", len(pts)))
            f.write(pts.tobytes())


def load_world(path) -> WorldSpec:
    path = Path(path)
    with path.open("rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError(f"{path} is not a VKW1 world file")
        width, height, resolution, channels, seed = _HEADER.unpack(f.read(_HEADER.size))
        rows = int(round(height / resolution))
        cols = int(round(width / resolution))
        trav = np.frombuffer(f.read(rows * cols), dtype=np.uint8).reshape(rows, cols).copy()
        n = rows * cols * channels * 8
        overhead = np.frombuffer(f.read(n), dtype=np.float64).reshape(rows, cols, channels).copy()
        (meta_len,) = struct.unpack("<I", f.read(4))
        meta = json.loads(f.read(meta_len).decode())
        (n_trails,) = struct.unpack("<I", f.read(4))
        trails = []
        for _ in range(n_trails):
            (npts,) = struct.unpack("<I", f.read(4))
            pts = np.frombuffer(f.read(npts * 16), dtype=np.float64).reshape(npts, 2).copy()
            trails.append(pts)
    regions = {k: (v if isinstance(v, str) else tuple(v)) for k, v in meta["regions"].items()}
    return WorldSpec(
        bounds=(width, height),
        resolution=resolution,
        traversability=trav,
        overhead=overhead,
        trails=trails,
        seed=int(seed),
        kind=meta["kind"],
        regions=regions,
    )


def export_rasters_csv(w: WorldSpec, out_dir) -> list[Path]:
    """Dump traversability and each overhead channel as plain CSV grids."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    p = out_dir / "traversability.csv"
    np.savetxt(p, w.traversability, fmt="%d", delimiter=",")
    written.append(p)
    for ch in range(w.overhead.shape[2]):
        p = out_dir / f"overhead_ch{ch}.csv"
        np.savetxt(p, w.overhead[:, :, ch], fmt="%.6f", delimiter=",")
        written.append(p)
    return written
