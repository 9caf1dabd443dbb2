"""Shared helpers: finite-difference gradient checks with ReLU-margin filtering.

Central differences are only meaningful when no ReLU preactivation sits
within the probe step of zero (the loss has a kink there). Helpers below
compute the worst-case margin of a net's hidden preactivations over the
inputs a loss touches, so tests can skip degenerate seeds deterministically.
"""

import numpy as np
import pytest

from otlab import autodiff as ad
from otlab import nn

FD_H = 1e-5
SAFE_MARGIN = 1e-3


def fd_gradient(loss_fn, tensor, h=FD_H):
    """Central-difference gradient of scalar loss_fn() w.r.t. one leaf tensor."""
    g = np.zeros(tensor.shape)
    it = np.nditer(tensor.data, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = tensor.data[idx]
        tensor.data[idx] = old + h
        lp = float(ad.value_of(loss_fn()))
        tensor.data[idx] = old - h
        lm = float(ad.value_of(loss_fn()))
        tensor.data[idx] = old
        g[idx] = (lp - lm) / (2.0 * h)
    return g


def max_rel_err(a, b, floor=1e-3):
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float((np.abs(a - b) / denom).max())


def check_gradients(loss_fn, params, h=FD_H, floor=1e-3):
    """Max relative error between autodiff and fd over all parameters."""
    leaves = [t for _, t in params.tensors()]
    grads = ad.grad(loss_fn(), leaves)
    worst = 0.0
    for t, g in zip(leaves, grads):
        fd = fd_gradient(loss_fn, t, h=h)
        worst = max(worst, max_rel_err(ad.value_of(g), fd, floor=floor))
    return worst


def relu_margin(params, x):
    """Smallest |preactivation| across hidden layers for inputs x."""
    x = np.asarray(x, dtype=np.float64)
    h = x
    worst = np.inf
    layers = params.layers
    for i, layer in enumerate(layers):
        pre = h @ ad.value_of(layer.W).T + ad.value_of(layer.b)
        if i < len(layers) - 1:
            worst = min(worst, float(np.abs(pre).min()))
            h = np.maximum(pre, 0.0)
        else:
            h = pre
    return worst


def random_mlp(dims, rng, bias_scale=0.1):
    """Random net with non-zero biases (keeps fd probes off ReLU kinks)."""
    p = nn.MlpParams.create(dims, rng)
    for layer in p.layers:
        layer.b.data[:] = bias_scale * rng.standard_normal(layer.b.shape)
    return p


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
