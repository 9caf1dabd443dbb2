"""Engine-level checks: primitive vjps, broadcasting, double backward."""

import numpy as np
import pytest

from otlab import autodiff as ad
from otlab.autodiff import Tensor
from otlab.errors import ContractError

from conftest import fd_gradient, max_rel_err


def test_constant_inputs_stay_out_of_graph():
    x = np.ones((2, 2))
    out = ad.add(x, x)
    assert isinstance(out, np.ndarray)


def test_stop_recording_returns_arrays():
    t = Tensor(np.ones((2, 2)))
    with ad.stop_recording():
        out = ad.mul(t, 3.0)
    assert isinstance(out, np.ndarray)
    assert np.all(out == 3.0)


def test_checked_construction_rejects_nonfinite():
    with pytest.raises(ContractError):
        Tensor(np.array([1.0, np.nan]), check=True)
    with pytest.raises(ContractError):
        Tensor(np.array([np.inf]), check=True)


def test_grad_requires_scalar_loss():
    t = Tensor(np.ones(3))
    out = ad.mul(t, 2.0)
    with pytest.raises(ContractError):
        ad.grad(out, [t])


def test_unreached_parameter_gets_zero_gradient():
    a = Tensor(np.ones(3))
    b = Tensor(np.ones(3))
    loss = ad.tsum(ad.square(a))
    ga, gb = ad.grad(loss, [a, b])
    assert np.allclose(ad.value_of(ga), 2.0)
    assert np.all(ad.value_of(gb) == 0.0)


def test_linear_map_gradient_is_input_sum():
    # loss = sum(x @ W.T) -> dL/dW[i, j] = sum_batch x[:, j]
    rng = np.random.default_rng(0)
    W = Tensor(rng.standard_normal((3, 2)))
    x = rng.standard_normal((5, 2))
    loss = ad.tsum(ad.matmul(x, ad.transpose(W)))
    (g,) = ad.grad(loss, [W])
    expected = np.tile(x.sum(axis=0), (3, 1))
    assert np.allclose(ad.value_of(g), expected)


def test_bias_broadcast_gradient():
    rng = np.random.default_rng(1)
    b = Tensor(rng.standard_normal(4))
    x = rng.standard_normal((7, 4))
    loss = ad.tsum(ad.add(x, b))
    (g,) = ad.grad(loss, [b])
    assert np.allclose(ad.value_of(g), 7.0)


def test_shared_subexpression_accumulates():
    t = Tensor(np.array([2.0]))
    y = ad.mul(t, t)  # t used twice
    (g,) = ad.grad(ad.tsum(y), [t])
    assert np.allclose(ad.value_of(g), 4.0)


@pytest.mark.parametrize("op_name", ["relu", "leaky_relu", "square", "tmean"])
def test_primitive_fd(op_name, rng):
    t = Tensor(rng.standard_normal((4, 3)) + 0.05)  # offset keeps kinks away
    op = {
        "relu": ad.relu,
        "leaky_relu": lambda a: ad.leaky_relu(a, 0.2),
        "square": ad.square,
        "tmean": lambda a: ad.mul(ad.tmean(a, axis=0), 1.0),
    }[op_name]

    def loss_fn():
        return ad.tsum(ad.square(op(t)))

    (g,) = ad.grad(loss_fn(), [t])
    fd = fd_gradient(loss_fn, t)
    assert max_rel_err(ad.value_of(g), fd) < 1e-6


def test_double_backward_matches_analytic():
    # s(w) = d/dx [w * x^2] = 2 w x; loss = s^2 = 4 w^2 x^2; dloss/dw = 8 w x^2
    w = Tensor(np.array(1.5))
    x = Tensor(np.array(0.7))
    y = ad.mul(w, ad.square(x))
    (gx,) = ad.grad(y, [x], create_graph=True)
    loss = ad.square(gx)
    (gw,) = ad.grad(loss, [w])
    assert np.allclose(ad.value_of(gw), 8.0 * 1.5 * 0.7**2)


def test_double_backward_through_matmul():
    # gradient-norm-squared of a linear functional: V(y) = <w, y>,
    # d/dy sum V = w per row, so penalty = n * ||w||^2 and dP/dw = 2 n w.
    rng = np.random.default_rng(3)
    w = Tensor(rng.standard_normal((1, 4)))
    y = Tensor(rng.standard_normal((6, 4)))
    out = ad.matmul(y, ad.transpose(w))
    (gy,) = ad.grad(ad.tsum(out), [y], create_graph=True)
    penalty = ad.tsum(ad.square(gy))
    (gw,) = ad.grad(penalty, [w])
    assert np.allclose(ad.value_of(gw), 2.0 * 6 * ad.value_of(w))
