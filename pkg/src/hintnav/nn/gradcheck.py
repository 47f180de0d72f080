"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

from .mlp import GradTape, ParamStore


def finite_diff_check(stores, loss_fn, h: float = 1e-5,
                      abs_floor: float = 1e-6) -> float:
    """Max relative error between tape gradients and central differences.

    `loss_fn(tape)` must rebuild the scalar loss deterministically from the
    tape's parameter Vars (fix any sampling noise inside). Perturbs every
    parameter entry, so keep the models tiny.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    named = {"": stores} if isinstance(stores, ParamStore) else dict(stores)
    tape = GradTape(named)
    loss = loss_fn(tape)
    analytic = tape.gradients(loss)
    worst = 0.0
    for sname, store in named.items():
        for pname, arr in store.arrays.items():
            flat = arr.reshape(-1)
            gflat = analytic[sname][pname].reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = float(loss_fn(GradTape(named)).value)
                flat[i] = orig - h
                dn = float(loss_fn(GradTape(named)).value)
                flat[i] = orig
                fd = (up - dn) / (2.0 * h)
                err = abs(fd - gflat[i]) / max(abs(fd), abs(gflat[i]), abs_floor)
                worst = max(worst, err)
    return worst
