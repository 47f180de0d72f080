import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hintnav.nn import (
    AdamState,
    GradTape,
    MlpSpec,
    ParamStore,
    adam_step,
    finite_diff_check,
    gaussian_nll,
    infonce_loss,
    init_mlp_params,
    kl_diag_gaussian,
    load_checkpoint,
    mlp_eval,
    mlp_eval_grad,
    mlp_forward,
    reparam_sample,
    save_checkpoint,
)
from hintnav.nn import autodiff as ad

LOG_2PI = math.log(2 * math.pi)


# ---- mlp machinery ----

def test_identity_linear_layer():
    spec = MlpSpec((3, 3))
    store = ParamStore({"W0": np.eye(3), "b0": np.zeros(3)})
    out = mlp_eval(spec, store, np.array([[1.0, -2.0, 0.5]]))
    assert np.allclose(out["out"], [[1.0, -2.0, 0.5]])


def test_zero_weights_zero_output():
    spec = MlpSpec((4, 2))
    store = ParamStore({"W0": np.zeros((4, 2)), "b0": np.zeros(2)})
    out = mlp_eval(spec, store, np.ones((3, 4)))
    assert np.all(out["out"] == 0.0)


def test_mlp_shape_mismatch_rejected():
    spec = MlpSpec((4, 2))
    store = init_mlp_params(spec, 0)
    with pytest.raises(ValueError):
        mlp_eval(spec, store, np.ones((3, 5)))


def test_head_validation():
    with pytest.raises(ValueError):
        MlpSpec((3, 4), heads={"a": (0, 2), "b": (1, 4)})  # overlap
    with pytest.raises(ValueError):
        MlpSpec((3, 4), heads={"a": (0, 2)})  # does not cover
    with pytest.raises(ValueError):
        MlpSpec((3,))
    with pytest.raises(ValueError):
        MlpSpec((3, 4), activation="selu")


def test_mlp_gradcheck_two_layer_tanh():
    spec = MlpSpec((5, 8, 3), "tanh")
    store = init_mlp_params(spec, 42)
    x = np.random.default_rng(1).normal(size=(4, 5))

    def loss_fn(tape):
        outs = mlp_forward(spec, tape.params(), x)
        return ad.mean_all(ad.square(outs["out"]))

    assert finite_diff_check(store, loss_fn, h=1e-5) <= 1e-4


def test_mlp_eval_grad_tape_yields_gradients():
    spec = MlpSpec((3, 4, 2), "relu")
    store = init_mlp_params(spec, 7)
    outs, tape = mlp_eval_grad(spec, store, np.array([0.5, -0.2, 1.0]))
    loss = ad.sum_all(ad.square(outs["out"]))
    grads = tape.gradients(loss)
    assert set(grads) == {"W0", "b0", "W1", "b1"}
    assert grads["W0"].shape == (3, 4)


# ---- gaussian nll ----

def test_nll_at_mean_unit_sigma():
    val = float(gaussian_nll(np.zeros(1), np.ones(1), np.zeros(1)))
    assert val == pytest.approx(0.5 * LOG_2PI)


def test_nll_one_sigma_off_mean():
    val = float(gaussian_nll(np.zeros(1), np.ones(1), np.ones(1)))
    assert val == pytest.approx(0.5 + 0.5 * LOG_2PI)


def test_nll_matches_reference_formula(rng):
    mu = rng.normal(size=6)
    sigma = np.exp(rng.normal(size=6) * 0.3)
    target = rng.normal(size=6)
    expected = sum(
        math.log(s) + (t - m) ** 2 / (2 * s * s) + 0.5 * LOG_2PI
        for m, s, t in zip(mu, sigma, target))
    assert float(gaussian_nll(mu, sigma, target)) == pytest.approx(expected, rel=1e-12)


def test_nll_rejects_nonpositive_sigma():
    with pytest.raises(ValueError):
        gaussian_nll(np.zeros(2), np.array([1.0, 0.0]), np.zeros(2))


# ---- kl ----

def test_kl_zero_at_prior():
    assert float(kl_diag_gaussian(np.zeros(4), np.ones(4))) == 0.0


def test_kl_unit_mean():
    assert float(kl_diag_gaussian(np.ones(1), np.ones(1))) == pytest.approx(0.5)


def test_kl_sigma_two_monte_carlo():
    analytic = float(kl_diag_gaussian(np.zeros(1), np.full(1, 2.0)))
    assert analytic == pytest.approx((4 - 1 - 2 * math.log(2)) / 2)
    rng = np.random.default_rng(123)
    z = rng.normal(0.0, 2.0, size=1_000_000)
    log_q = -0.5 * (z / 2.0) ** 2 - math.log(2.0) - 0.5 * LOG_2PI
    log_p = -0.5 * z ** 2 - 0.5 * LOG_2PI
    mc = float(np.mean(log_q - log_p))
    assert abs(mc - analytic) < 1e-2


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6),
       st.lists(st.floats(0.05, 5), min_size=1, max_size=6))
@settings(max_examples=100, deadline=None)
def test_kl_nonnegative(mu, sigma):
    n = min(len(mu), len(sigma))
    val = float(kl_diag_gaussian(np.array(mu[:n]), np.array(sigma[:n])))
    assert val >= -1e-12


# ---- reparameterization ----

def test_reparam_tiny_sigma_returns_mu():
    mu = np.array([1.5, -2.0])
    out = reparam_sample(mu, np.full(2, 1e-12), rng=np.random.default_rng(0))
    assert np.allclose(out.value, mu, atol=1e-9)


def test_reparam_mean_matches_mu():
    rng = np.random.default_rng(5)
    mu, sigma = 0.7, 1.3
    n = 100_000
    vals = reparam_sample(np.full(n, mu), np.full(n, sigma), rng=rng).value
    assert abs(vals.mean() - mu) < 4 * sigma / math.sqrt(n)


def test_reparam_gradient_of_expected_square():
    # d/dmu E[(mu + sigma eps)^2] = 2 mu = 0 at mu=0
    rng = np.random.default_rng(9)
    n = 100_000
    mu = ad.Var(np.zeros(n))
    sample = reparam_sample(mu, np.ones(n), rng=rng)
    loss = ad.mean_all(ad.square(sample))
    ad.backward(loss)
    assert abs(mu.grad.sum()) < 4 / math.sqrt(n)


# ---- infonce ----

def test_infonce_uniform_scores():
    val = float(infonce_loss(np.zeros(256), 17))
    assert val == pytest.approx(math.log(256))


def test_infonce_saturated_positive():
    scores = np.zeros(16)
    scores[3] = 100.0
    assert float(infonce_loss(scores, 3)) <= 1e-10


def test_infonce_hand_softmax():
    val = float(infonce_loss(np.array([1.0, 0.0, 0.0]), 0))
    assert val == pytest.approx(-math.log(math.e / (math.e + 2)), rel=1e-12)


def test_infonce_validation():
    with pytest.raises(ValueError):
        infonce_loss(np.zeros(0), 0)
    with pytest.raises(ValueError):
        infonce_loss(np.zeros(4), 4)


def test_infonce_no_overflow_at_extreme_scores():
    val = float(infonce_loss(np.array([1e4, -1e4, 0.0]), 0))
    assert math.isfinite(val) and val >= 0.0


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=12))
@settings(max_examples=100, deadline=None)
def test_infonce_nonnegative(scores):
    val = float(infonce_loss(np.array(scores), 0))
    assert val >= -1e-12


def test_infonce_batch_rows_match_single():
    rng = np.random.default_rng(2)
    scores = rng.normal(size=(5, 7))
    pos = rng.integers(0, 7, size=5)
    batch = infonce_loss(scores, pos).value
    singles = [float(infonce_loss(scores[k], int(pos[k]))) for k in range(5)]
    assert np.allclose(batch, singles)


# ---- adam ----

def test_adam_zero_gradient_no_change():
    store = ParamStore({"w": np.array([1.0, 2.0])})
    state = AdamState.for_store(store)
    adam_step(store, {"w": np.zeros(2)}, state, lr=0.1)
    assert np.array_equal(store.arrays["w"], [1.0, 2.0])


def test_adam_first_step_closed_form():
    store = ParamStore({"w": np.array([1.0, -2.0, 0.3])})
    state = AdamState.for_store(store)
    g = np.array([0.3, -0.7, 1e-12])
    lr = 1e-2
    adam_step(store, {"w": g}, state, lr=lr)
    expected = np.array([1.0, -2.0, 0.3]) - lr * g / (np.abs(g) + 1e-8)
    assert np.allclose(store.arrays["w"], expected, atol=1e-12)


def test_adam_converges_on_quadratic_bowl():
    store = ParamStore({"x": np.array([3.0])})
    state = AdamState.for_store(store)
    for _ in range(10_000):
        g = store.arrays["x"].copy()  # gradient of x^2/2
        adam_step(store, {"x": g}, state, lr=1e-2)
    assert abs(store.arrays["x"][0]) < 1e-3


def test_adam_shape_mismatch_rejected():
    store = ParamStore({"w": np.zeros(3)})
    state = AdamState.for_store(store)
    with pytest.raises(ValueError):
        adam_step(store, {"w": np.zeros(4)}, state)


def test_adam_deterministic():
    runs = []
    for _ in range(2):
        store = ParamStore({"w": np.array([1.0, 2.0])})
        state = AdamState.for_store(store)
        for k in range(50):
            adam_step(store, {"w": np.array([0.1 * k, -0.2])}, state, lr=1e-3)
        runs.append(store.arrays["w"].copy())
    assert np.array_equal(runs[0], runs[1])


# ---- gradcheck on linear least squares ----

def test_gradcheck_exact_for_quadratic():
    spec = MlpSpec((3, 2))
    store = init_mlp_params(spec, 3)
    x = np.random.default_rng(0).normal(size=(6, 3))
    y = np.random.default_rng(1).normal(size=(6, 2))

    def loss_fn(tape):
        out = mlp_forward(spec, tape.params(), x)["out"]
        return ad.mean_all(ad.square(ad.sub(out, ad.as_var(y))))

    assert finite_diff_check(store, loss_fn, h=1e-5) <= 1e-8


def test_paramstore_shape_guard():
    store = ParamStore({"w": np.zeros((2, 2))})
    with pytest.raises(ValueError):
        store.assign("w", np.zeros((3, 2)))
    with pytest.raises(ValueError):
        ParamStore({"w": np.array([1.0, np.nan])})


# ---- checkpoint io ----

def test_checkpoint_roundtrip(tmp_path):
    spec = MlpSpec((3, 4, 2))
    a = init_mlp_params(spec, 1)
    b = init_mlp_params(spec, 2)
    p = tmp_path / "model.vkp"
    save_checkpoint(p, {"enc": a, "dec": b}, spec.hash(), meta={"note": 1})
    stores, meta, h = load_checkpoint(p, expected_hash=spec.hash())
    assert meta == {"note": 1}
    assert h == spec.hash()
    for name in a.arrays:
        assert np.array_equal(stores["enc"].arrays[name], a.arrays[name])
        assert np.array_equal(stores["dec"].arrays[name], b.arrays[name])


def test_checkpoint_hash_mismatch(tmp_path):
    spec = MlpSpec((3, 4, 2))
    p = tmp_path / "model.vkp"
    save_checkpoint(p, {"m": init_mlp_params(spec, 1)}, spec.hash())
    with pytest.raises(ValueError):
        load_checkpoint(p, expected_hash="deadbeef")


def test_checkpoint_bad_magic(tmp_path):
    p = tmp_path / "bad.vkp"
    p.write_bytes(b"XXXX" + b"\x00" * 16)
    with pytest.raises(ValueError):
        load_checkpoint(p)
