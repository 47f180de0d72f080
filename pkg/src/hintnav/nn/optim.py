"""Adam with bias correction, updating stores in place."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mlp import ParamStore


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_store(cls, store: ParamStore) -> "AdamState":
        return cls(
            m={k: np.zeros_like(a) for k, a in store.arrays.items()},
            v={k: np.zeros_like(a) for k, a in store.arrays.items()},
        )


def adam_step(params: ParamStore, grads: dict, state: AdamState,
              lr: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8):
    """One deterministic Adam update; returns (params, state)."""
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for name, arr in params.arrays.items():
        g = np.asarray(grads.get(name, np.zeros_like(arr)), dtype=np.float64)
        if g.shape != arr.shape:
            raise ValueError(f"gradient shape mismatch for {name!r}: "
                             f"{g.shape} != {arr.shape}")
        m = state.m[name] = beta1 * state.m[name] + (1.0 - beta1) * g
        v = state.v[name] = beta2 * state.v[name] + (1.0 - beta2) * g * g
        arr -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params, state
