"""VKP1 checkpoint container: JSON header + named float64 arrays."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .mlp import ParamStore

MAGIC = b"VKP1"


def save_checkpoint(path, stores: dict[str, ParamStore], spec_hash: str,
                    meta: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "spec_hash": spec_hash,
        "meta": meta or {},
        "stores": {name: {"seed": st.seed, "arrays": st.names()}
                   for name, st in stores.items()},
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with path.open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for sname, st in stores.items():
            for pname, arr in st.arrays.items():
                key = f"{sname}/{pname}".encode()
                f.write(struct.pack("<H", len(key)))
                f.write(key)
                f.write(struct.pack("<B", arr.ndim))
                for d in arr.shape:
                    f.write(struct.pack("<I", d))
                f.write(np.ascontiguousarray(arr, dtype=np.float64).tobytes())


def load_checkpoint(path, expected_hash: str | None = None):
    """Returns (stores: dict[str, ParamStore], meta: dict, spec_hash: str)."""
    path = Path(path)
    with path.open("rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError(f"{path} is not a VKP1 checkpoint")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode())
        if expected_hash is not None and header["spec_hash"] != expected_hash:
            raise ValueError("checkpoint spec hash does not match the model spec")
        stores: dict[str, dict[str, np.ndarray]] = {}
        total = sum(len(info["arrays"]) for info in header["stores"].values())
        for _ in range(total):
            (klen,) = struct.unpack("<H", f.read(2))
            key = f.read(klen).decode()
            (ndim,) = struct.unpack("<B", f.read(1))
            shape = tuple(struct.unpack("<I", f.read(4))[0] for _ in range(ndim))
            count = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(f.read(count * 8), dtype=np.float64).reshape(shape)
            s, p = key.split("/", 1)
            stores.setdefault(s, {})[p] = arr.copy()
    out = {name: ParamStore(arrays, header["stores"][name]["seed"])
           for name, arrays in stores.items()}
    return out, header["meta"], header["spec_hash"]


def write_curve_csv(path, rows, columns=("step", "loss", "kl_term", "nll_term")) -> None:
    """Training-curve CSV; rows are sequences matching `columns`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(repr(v) if isinstance(v, float) else str(v)
                             for v in row) + "\n")
