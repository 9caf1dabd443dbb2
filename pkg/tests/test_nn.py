"""Forward-pass contracts, ICNN convexity, and Adam behavior."""

import numpy as np
import pytest

from otlab import autodiff as ad
from otlab import nn
from otlab.autodiff import Tensor
from otlab.errors import ConfigError, GradientError, ShapeError

from conftest import check_gradients, random_mlp, relu_margin


def identity_mlp(d, n_layers=1):
    """Stack of exact identity layers (biases shift through the ReLU)."""
    dims = (d,) * (n_layers + 1)
    rng = np.random.default_rng(0)
    p = nn.MlpParams.create(dims, rng)
    for i, layer in enumerate(p.layers):
        layer.W.data[:] = np.eye(d)
        layer.b.data[:] = 0.0
    return p


def test_identity_one_layer():
    p = identity_mlp(2, n_layers=1)
    out = ad.value_of(nn.mlp_forward(p, np.array([[1.0, 2.0]])))
    assert np.array_equal(out, [[1.0, 2.0]])


def test_relu_clamps_negatives():
    rng = np.random.default_rng(0)
    p = nn.MlpParams.create((2, 2, 2), rng)
    p.layers[0].W.data[:] = np.eye(2)
    p.layers[0].b.data[:] = [-3.0, -3.0]
    p.layers[1].W.data[:] = np.eye(2)
    p.layers[1].b.data[:] = 0.0
    out = ad.value_of(nn.mlp_forward(p, np.array([[1.0, 2.0]])))
    assert np.array_equal(out, [[0.0, 0.0]])


def test_forward_matches_straight_line_reimplementation(rng):
    p = random_mlp((3, 16, 16, 2), rng)
    x = rng.standard_normal((9, 3))
    out = ad.value_of(nn.mlp_forward(p, x))
    h = x
    mats = [(ad.value_of(l.W), ad.value_of(l.b)) for l in p.layers]
    for i, (W, b) in enumerate(mats):
        h = h @ W.T + b
        if i < len(mats) - 1:
            h = np.maximum(h, 0.0)
    assert np.allclose(out, h, atol=1e-13)


def test_forward_shape_error_names_layer(rng):
    p = random_mlp((3, 4, 2), rng)
    with pytest.raises(ShapeError, match="layer 0"):
        nn.mlp_forward(p, np.zeros((2, 5)))


def test_backprop_matches_fd_on_transport_style_loss(rng):
    p = random_mlp((3, 8, 3), rng)
    x = rng.standard_normal((5, 3))
    assert relu_margin(p, x) > 1e-3

    def loss_fn():
        out = nn.mlp_forward(p, x)
        return ad.tmean(ad.tsum(ad.square(ad.sub(x, out)), axis=1))

    assert check_gradients(loss_fn, p) < 1e-4


# ---------------------------------------------------------------------------
# ICNN
# ---------------------------------------------------------------------------


def zeroed_icnn(d=2, hidden=8, alpha=1.0):
    ic = nn.IcnnParams.create((d, hidden, 1), alpha=alpha, rng=np.random.default_rng(0))
    for layer in ic.base.layers:
        layer.W.data[:] = 0.0
        layer.b.data[:] = 0.0
    for s in ic.skips:
        s.data[:] = 0.0
    return ic


def test_icnn_alpha_term_only():
    ic = zeroed_icnn(alpha=1.0)
    v = ad.value_of(nn.icnn_potential(ic, np.array([[1.0, 1.0]])))
    assert np.allclose(v, [2.0])


def test_icnn_rejects_nonpositive_alpha():
    with pytest.raises(ConfigError):
        nn.IcnnParams.create((2, 4, 1), alpha=-1.0, rng=np.random.default_rng(0))


def test_icnn_linear_f_is_convex(rng):
    # zero hidden-to-hidden weights leave f linear in y
    ic = nn.IcnnParams.create((2, 8, 1), alpha=1.0, rng=rng)
    ic.base.layers[1].W.data[:] = 0.0
    assert nn.convexity_violation(ic, rng, n_triples=100) <= 1e-9


def test_icnn_random_projected_net_is_convex(rng):
    ic = nn.IcnnParams.create((3, 16, 1), alpha=1.0, rng=rng)
    ic.project()
    assert nn.convexity_violation(ic, rng, n_triples=1000) <= 1e-9


def test_icnn_potential_residual_is_convex_part(rng):
    ic = nn.IcnnParams.create((2, 8, 1), alpha=2.0, rng=rng)
    y = rng.standard_normal((5, 2))
    v = ad.value_of(nn.icnn_potential(ic, y))
    f = ad.value_of(nn.icnn_convex_part(nn.detached(ic), y)).ravel()
    assert np.allclose(2.0 * (y**2).sum(axis=1) - v, f, atol=1e-12)


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


def test_adam_zero_gradient_is_fixed_point(rng):
    p = random_mlp((2, 4, 1), rng)
    st = nn.AdamState.create(p, lr=0.1, beta1=0.0, beta2=0.9)
    before = {n: ad.value_of(t).copy() for n, t in p.tensors()}
    nn.adam_step(st, p, {n: np.zeros(t.shape) for n, t in p.tensors()})
    assert st.step == 1
    for n, t in p.tensors():
        assert np.array_equal(ad.value_of(t), before[n])


def test_adam_single_step_closed_form():
    p = nn.MlpParams(layers=[nn.Layer(W=Tensor(np.array([[1.0]])), b=Tensor(np.array([0.0])))])
    st = nn.AdamState.create(p, lr=0.1, beta1=0.0, beta2=0.9)
    nn.adam_step(st, p, {"layers.0.W": np.array([[1.0]]), "layers.0.b": np.zeros(1)})
    # m_hat = g = 1; v = 0.1 * 1; v_hat = 0.1 / (1 - 0.9) = 1
    expected = 1.0 - 0.1 * 1.0 / (np.sqrt(1.0) + 1e-8)
    assert abs(p.layers[0].W.data[0, 0] - expected) < 1e-15


def test_adam_clamps_icnn_weights_to_zero(rng):
    ic = nn.IcnnParams.create((2, 4, 1), alpha=1.0, rng=rng)
    ic.base.layers[1].W.data[:] = 1e-6  # barely positive; a positive grad pushes it negative
    st = nn.AdamState.create(ic, lr=0.1, beta1=0.0, beta2=0.9)
    grads = {n: np.zeros(t.shape) for n, t in ic.tensors()}
    grads["layers.1.W"] = np.ones(ic.base.layers[1].W.shape)
    nn.adam_step(st, ic, grads)
    assert np.all(ic.base.layers[1].W.data == 0.0)


def test_adam_rejects_nan_gradient_by_name(rng):
    p = random_mlp((2, 4, 1), rng)
    st = nn.AdamState.create(p, lr=0.1, beta1=0.0, beta2=0.9)
    grads = {n: np.zeros(t.shape) for n, t in p.tensors()}
    grads["layers.1.W"] = np.full(p.layers[1].W.shape, np.nan)
    with pytest.raises(GradientError, match="layers.1.W"):
        nn.adam_step(st, p, grads)


def test_adam_deterministic_across_runs(rng):
    def run():
        r = np.random.default_rng(7)
        p = random_mlp((2, 8, 2), r)
        st = nn.AdamState.create(p, lr=1e-3, beta1=0.0, beta2=0.9)
        x = r.standard_normal((4, 2))
        for _ in range(5):
            loss = ad.tmean(ad.tsum(ad.square(nn.mlp_forward(p, x)), axis=1))
            gs = ad.grad(loss, [t for _, t in p.tensors()])
            nn.adam_step(st, p, {n: ad.value_of(g) for (n, _), g in zip(p.tensors(), gs)})
        return np.concatenate([ad.value_of(t).ravel() for _, t in p.tensors()])

    a, b = run(), run()
    assert np.array_equal(a, b)


def test_mlp_validate_rejects_broken_chain(rng):
    p = random_mlp((3, 4, 2), rng)
    q = random_mlp((3, 6, 2), rng)
    p.layers[1] = q.layers[1]  # expects width 6, previous layer emits 4
    with pytest.raises(ShapeError, match="layer 0"):
        p.validate()
