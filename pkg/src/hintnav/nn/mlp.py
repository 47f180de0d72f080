"""Parameter stores, MLP specs, and tape-backed evaluation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

ACTIVATIONS = {"tanh": ad.tanh, "relu": ad.relu}


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths (input first) with named slices of the final layer."""

    widths: tuple[int, ...]
    activation: str = "tanh"
    heads: dict = field(default_factory=dict)  # name -> (lo, hi)

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise ValueError("widths must list >= 2 entries, all >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        out = self.widths[-1]
        heads = dict(self.heads) if self.heads else {"out": (0, out)}
        covered = np.zeros(out, dtype=bool)
        for name, (lo, hi) in heads.items():
            if not (0 <= lo < hi <= out):
                raise ValueError(f"head {name!r} slice ({lo}, {hi}) out of range")
            if covered[lo:hi].any():
                raise ValueError(f"head {name!r} overlaps another head")
            covered[lo:hi] = True
        if not covered.all():
            raise ValueError("heads must cover the full output layer")
        object.__setattr__(self, "heads", heads)

    def canonical_json(self) -> str:
        return json.dumps({
            "widths": list(self.widths),
            "activation": self.activation,
            "heads": {k: list(v) for k, v in sorted(self.heads.items())},
        }, sort_keys=True)

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


class ParamStore:
    """Named float64 arrays with immutable shapes; values update in place."""

    def __init__(self, arrays: dict[str, np.ndarray], seed: int = 0):
        self.arrays = {k: np.array(v, dtype=np.float64) for k, v in arrays.items()}
        for name, arr in self.arrays.items():
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"parameter {name!r} contains non-finite values")
        self.seed = int(seed)
        self._shapes = {k: v.shape for k, v in self.arrays.items()}

    def assign(self, name: str, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self._shapes[name]:
            raise ValueError(f"shape mismatch for {name!r}: "
                             f"{value.shape} != {self._shapes[name]}")
        self.arrays[name][...] = value

    def names(self):
        return list(self.arrays)

    def copy(self) -> "ParamStore":
        return ParamStore({k: v.copy() for k, v in self.arrays.items()}, self.seed)


def init_mlp_params(spec: MlpSpec, seed: int) -> ParamStore:
    """Scaled-uniform weight init, zero biases, from a dedicated seed."""
    rng = np.random.default_rng(seed)
    arrays: dict[str, np.ndarray] = {}
    for k, (n_in, n_out) in enumerate(zip(spec.widths[:-1], spec.widths[1:])):
        limit = np.sqrt(6.0 / (n_in + n_out))
        arrays[f"W{k}"] = rng.uniform(-limit, limit, size=(n_in, n_out))
        arrays[f"b{k}"] = np.zeros(n_out)
    return ParamStore(arrays, seed)


class GradTape:
    """Wraps one or more parameter stores as Var leaves for a forward pass."""

    def __init__(self, stores):
        if isinstance(stores, ParamStore):
            self._single = True
            stores = {"": stores}
        else:
            self._single = False
        self.stores = stores
        self.vars = {sname: {pname: ad.Var(arr) for pname, arr in st.arrays.items()}
                     for sname, st in stores.items()}

    def params(self, sname: str = "") -> dict[str, ad.Var]:
        return self.vars[sname]

    def gradients(self, loss: ad.Var):
        """dLoss/dParam for every wrapped parameter (zeros if untouched)."""
        ad.backward(loss)
        nested = {
            sname: {
                pname: (v.grad if v.grad is not None else np.zeros_like(v.value))
                for pname, v in pv.items()
            }
            for sname, pv in self.vars.items()
        }
        return nested[""] if self._single else nested


def mlp_forward(spec: MlpSpec, pvars: dict[str, ad.Var], x) -> dict[str, ad.Var]:
    """Run the network on a (B, n) batch of Vars; returns named head Vars."""
    h = ad.as_var(x)
    if h.value.ndim == 1:
        h = ad.Var(h.value[None, :], (h,))
        # promote without breaking gradient flow for Var inputs
        parent = h.parents[0]
        h.bwd = lambda g, p=parent: ad._accum(p, g[0])
    if h.value.shape[1] != spec.widths[0]:
        raise ValueError(f"input width {h.value.shape[1]} != spec {spec.widths[0]}")
    act = ACTIVATIONS[spec.activation]
    n_layers = len(spec.widths) - 1
    for k in range(n_layers):
        h = ad.affine(h, pvars[f"W{k}"], pvars[f"b{k}"])
        if k < n_layers - 1:
            h = act(h)
    return {name: ad.slice_cols(h, lo, hi) for name, (lo, hi) in spec.heads.items()}


def mlp_eval_grad(spec: MlpSpec, params: ParamStore, x):
    """Forward pass returning (named output Vars, tape for gradients)."""
    tape = GradTape(params)
    outputs = mlp_forward(spec, tape.params(), x)
    return outputs, tape


def mlp_eval(spec: MlpSpec, params: ParamStore, x) -> dict[str, np.ndarray]:
    """Gradient-free evaluation; returns plain arrays."""
    outputs, _ = mlp_eval_grad(spec, params, x)
    return {k: v.value for k, v in outputs.items()}
