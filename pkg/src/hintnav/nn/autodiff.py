"""Reverse-mode differentiation over a small dense-network op set.

Values are float64 numpy arrays wrapped in Var nodes; each op records a
closure that accumulates adjoints into its inputs. backward() seeds a scalar
root and sweeps the graph once in reverse topological order.
"""

from __future__ import annotations

import math

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)


class Var:
    __slots__ = ("value", "grad", "parents", "bwd")

    def __init__(self, value, parents=(), bwd=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.bwd = bwd

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        return f"Var(shape={self.value.shape})"


def as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _accum(var: Var, g: np.ndarray) -> None:
    if var.grad is None:
        var.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        var.grad = var.grad + g


def backward(root: Var) -> None:
    """Populate .grad on every node reachable from a scalar root."""
    if root.value.size != 1:
        raise ValueError("backward root must be a scalar")
    order: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    for node in order:
        node.grad = None
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node.bwd is not None and node.grad is not None:
            node.bwd(node.grad)


# ---- primitive ops ----

def affine(x, W, b) -> Var:
    """x @ W + b for x (B, n), W (n, m), b (m,)."""
    x, W, b = as_var(x), as_var(W), as_var(b)
    if x.value.ndim != 2 or x.value.shape[1] != W.value.shape[0]:
        raise ValueError(f"affine shape mismatch: x {x.value.shape} W {W.value.shape}")
    if b.value.shape != (W.value.shape[1],):
        raise ValueError(f"affine bias shape mismatch: {b.value.shape}")
    out = Var(x.value @ W.value + b.value, (x, W, b))

    def bwd(g):
        _accum(x, g @ W.value.T)
        _accum(W, x.value.T @ g)
        _accum(b, g.sum(axis=0))
    out.bwd = bwd
    return out


def tanh(x) -> Var:
    x = as_var(x)
    t = np.tanh(x.value)
    out = Var(t, (x,))
    out.bwd = lambda g: _accum(x, g * (1.0 - t * t))
    return out


def relu(x) -> Var:
    x = as_var(x)
    mask = x.value > 0
    out = Var(np.where(mask, x.value, 0.0), (x,))
    out.bwd = lambda g: _accum(x, g * mask)
    return out


def concat_cols(parts) -> Var:
    parts = [as_var(p) for p in parts]
    out = Var(np.concatenate([p.value for p in parts], axis=1), tuple(parts))
    widths = [p.value.shape[1] for p in parts]

    def bwd(g):
        at = 0
        for p, w in zip(parts, widths):
            _accum(p, g[:, at:at + w])
            at += w
    out.bwd = bwd
    return out


def slice_cols(x, lo: int, hi: int) -> Var:
    x = as_var(x)
    out = Var(x.value[:, lo:hi], (x,))

    def bwd(g):
        full = np.zeros_like(x.value)
        full[:, lo:hi] = g
        _accum(x, full)
    out.bwd = bwd
    return out


def add(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    if a.value.shape != b.value.shape:
        raise ValueError("add requires equal shapes")
    out = Var(a.value + b.value, (a, b))

    def bwd(g):
        _accum(a, g)
        _accum(b, g)
    out.bwd = bwd
    return out


def sub(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    if a.value.shape != b.value.shape:
        raise ValueError("sub requires equal shapes")
    out = Var(a.value - b.value, (a, b))

    def bwd(g):
        _accum(a, g)
        _accum(b, -g)
    out.bwd = bwd
    return out


def mul(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    if a.value.shape != b.value.shape:
        raise ValueError("mul requires equal shapes")
    out = Var(a.value * b.value, (a, b))

    def bwd(g):
        _accum(a, g * b.value)
        _accum(b, g * a.value)
    out.bwd = bwd
    return out


def scale(x, c: float) -> Var:
    x = as_var(x)
    out = Var(x.value * c, (x,))
    out.bwd = lambda g: _accum(x, g * c)
    return out


def exp(x) -> Var:
    x = as_var(x)
    e = np.exp(x.value)
    out = Var(e, (x,))
    out.bwd = lambda g: _accum(x, g * e)
    return out


def square(x) -> Var:
    x = as_var(x)
    out = Var(x.value * x.value, (x,))
    out.bwd = lambda g: _accum(x, 2.0 * g * x.value)
    return out


def repeat_rows(x, k: int) -> Var:
    """Repeat each row of a (B, W) matrix k times -> (B*k, W)."""
    x = as_var(x)
    if x.value.ndim != 2:
        raise ValueError("repeat_rows expects a 2-D input")
    out = Var(np.repeat(x.value, k, axis=0), (x,))

    def bwd(g):
        b, w = x.value.shape
        _accum(x, g.reshape(b, k, w).sum(axis=1))
    out.bwd = bwd
    return out


def reshape(x, shape) -> Var:
    x = as_var(x)
    orig = x.value.shape
    out = Var(x.value.reshape(shape), (x,))
    out.bwd = lambda g: _accum(x, g.reshape(orig))
    return out


def sum_all(x) -> Var:
    x = as_var(x)
    out = Var(x.value.sum(), (x,))
    out.bwd = lambda g: _accum(x, np.full_like(x.value, float(g)))
    return out


def mean_all(x) -> Var:
    x = as_var(x)
    n = x.value.size
    out = Var(x.value.mean(), (x,))
    out.bwd = lambda g: _accum(x, np.full_like(x.value, float(g) / n))
    return out


# ---- distribution / objective composites ----

def gaussian_nll(mu, sigma, target) -> Var:
    """Sum over the last axis of log s + (t - m)^2 / (2 s^2) + log(2 pi)/2."""
    mu, sigma = as_var(mu), as_var(sigma)
    t = np.asarray(target, dtype=np.float64)
    if mu.value.shape != sigma.value.shape or mu.value.shape != t.shape:
        raise ValueError("gaussian_nll requires mu, sigma, target of equal shape")
    s = sigma.value
    if np.any(s <= 0):
        raise ValueError("sigma must be strictly positive")
    m = mu.value
    val = np.sum(np.log(s) + (t - m) ** 2 / (2.0 * s * s) + 0.5 * LOG_2PI, axis=-1)
    out = Var(val, (mu, sigma))

    def bwd(g):
        ge = np.expand_dims(g, -1) if np.ndim(g) < m.ndim else g
        _accum(mu, ge * (m - t) / (s * s))
        _accum(sigma, ge * (1.0 / s - (t - m) ** 2 / (s ** 3)))
    out.bwd = bwd
    return out


def kl_diag_gaussian(mu, sigma) -> Var:
    """KL from a diagonal Gaussian to the unit Gaussian, summed over last axis."""
    mu, sigma = as_var(mu), as_var(sigma)
    if mu.value.shape != sigma.value.shape:
        raise ValueError("kl requires mu, sigma of equal shape")
    s = sigma.value
    if np.any(s <= 0):
        raise ValueError("sigma must be strictly positive")
    m = mu.value
    val = 0.5 * np.sum(s * s + m * m - 1.0 - 2.0 * np.log(s), axis=-1)
    out = Var(val, (mu, sigma))

    def bwd(g):
        ge = np.expand_dims(g, -1) if np.ndim(g) < m.ndim else g
        _accum(mu, ge * m)
        _accum(sigma, ge * (s - 1.0 / s))
    out.bwd = bwd
    return out


def reparam_sample(mu, sigma, rng=None, eps=None) -> Var:
    """mu + sigma * eps with eps ~ N(0, I); gradients flow to mu and sigma."""
    mu, sigma = as_var(mu), as_var(sigma)
    if mu.value.shape != sigma.value.shape:
        raise ValueError("reparam requires mu, sigma of equal shape")
    if np.any(sigma.value <= 0):
        raise ValueError("sigma must be strictly positive")
    if eps is None:
        if rng is None:
            raise ValueError("provide rng or eps")
        eps = rng.standard_normal(mu.value.shape)
    eps = np.asarray(eps, dtype=np.float64)
    out = Var(mu.value + sigma.value * eps, (mu, sigma))

    def bwd(g):
        _accum(mu, g)
        _accum(sigma, g * eps)
    out.bwd = bwd
    return out


def infonce_loss(scores, positive_index) -> Var:
    """Softmax cross-entropy of the positive against all scores.

    1-D scores with an int index give a scalar; (B, N) scores with a (B,)
    index array give a (B,) loss vector. Stabilized by max subtraction.
    """
    scores = as_var(scores)
    v = scores.value
    if v.size == 0:
        raise ValueError("scores must be nonempty")
    if v.ndim == 1:
        pos = int(positive_index)
        if not 0 <= pos < v.shape[0]:
            raise ValueError("positive_index out of range")
        m = v.max()
        z = np.exp(v - m)
        denom = z.sum()
        out = Var(np.log(denom) + m - v[pos], (scores,))

        def bwd(g):
            soft = z / denom
            soft[pos] -= 1.0
            _accum(scores, float(g) * soft)
        out.bwd = bwd
        return out
    if v.ndim == 2:
        pos = np.asarray(positive_index, dtype=np.int64)
        if pos.shape != (v.shape[0],):
            raise ValueError("positive_index must have one entry per row")
        if np.any(pos < 0) or np.any(pos >= v.shape[1]):
            raise ValueError("positive_index out of range")
        rows = np.arange(v.shape[0])
        m = v.max(axis=1, keepdims=True)
        z = np.exp(v - m)
        denom = z.sum(axis=1, keepdims=True)
        out = Var(np.log(denom[:, 0]) + m[:, 0] - v[rows, pos], (scores,))

        def bwd(g):
            soft = z / denom
            soft[rows, pos] -= 1.0
            _accum(scores, np.expand_dims(g, -1) * soft)
        out.bwd = bwd
        return out
    raise ValueError("scores must be 1-D or 2-D")
