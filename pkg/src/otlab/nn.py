"""MLP and input-convex network parameters, forward passes, and Adam.

Weights live in autodiff leaf Tensors and are updated in place by
:func:`adam_step`. Forward passes work both on live parameters (building
a graph for the optimizer) and on :func:`detached` views (plain ndarrays,
no graph), which is how one network is held constant while the other one
trains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, value_of
from .errors import ConfigError, GradientError, ShapeError

ACTIVATIONS = ("relu", "leaky_relu")


@dataclass
class Layer:
    W: object  # Tensor [out, in], or ndarray in a detached view
    b: object  # Tensor [out]


@dataclass
class MlpParams:
    """Plain fully connected net: affine + activation per layer, linear head."""

    layers: list
    activation: str = "relu"
    slope: float = 0.2  # leaky_relu only

    @classmethod
    def create(cls, dims, rng, activation="relu", slope=0.2):
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        if len(dims) < 2:
            raise ConfigError("need at least input and output dimensions")
        layers = []
        for i, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
            layers.append(
                Layer(
                    W=Tensor(_kaiming_uniform(d_out, d_in, rng), name=f"layers.{i}.W", check=True),
                    b=Tensor(np.zeros(d_out), name=f"layers.{i}.b"),
                )
            )
        return cls(layers=layers, activation=activation, slope=slope)

    @property
    def in_dim(self):
        return value_of(self.layers[0].W).shape[1]

    @property
    def out_dim(self):
        return value_of(self.layers[-1].W).shape[0]

    def tensors(self):
        out = []
        for i, layer in enumerate(self.layers):
            out.append((f"layers.{i}.W", layer.W))
            out.append((f"layers.{i}.b", layer.b))
        return out

    def project(self):
        pass

    def validate(self):
        for i in range(len(self.layers) - 1):
            d_out = value_of(self.layers[i].W).shape[0]
            d_in = value_of(self.layers[i + 1].W).shape[1]
            if d_out != d_in:
                raise ShapeError(f"layer {i} out={d_out} does not chain into layer {i + 1} in={d_in}")


def _kaiming_uniform(d_out, d_in, rng):
    bound = np.sqrt(6.0 / d_in)
    return rng.uniform(-bound, bound, size=(d_out, d_in))


def detached(params):
    """Same structure with bare ndarrays: constants for the other net's loss."""
    if isinstance(params, IcnnParams):
        base = detached(params.base)
        skips = [value_of(s) for s in params.skips]
        return IcnnParams(base=base, skips=skips, alpha=params.alpha)
    layers = [Layer(W=value_of(l.W), b=value_of(l.b)) for l in params.layers]
    return MlpParams(layers=layers, activation=params.activation, slope=params.slope)


def mlp_forward(params, x):
    """Apply the net to a [batch, d_in] input; no activation on the last layer."""
    h = x
    n_layers = len(params.layers)
    for i, layer in enumerate(params.layers):
        width = ad.shape_of(h)[-1]
        want = ad.shape_of(layer.W)[1]
        if width != want:
            raise ShapeError(f"layer {i} expects input width {want}, got {width}")
        h = ad.affine(h, layer.W, layer.b)
        if i < n_layers - 1:
            h = _activate(h, params)
    return h


def _activate(h, params):
    if params.activation == "relu":
        return ad.relu(h)
    return ad.leaky_relu(h, params.slope)


# ---------------------------------------------------------------------------
# Input-convex potential
# ---------------------------------------------------------------------------


@dataclass
class IcnnParams:
    """Potential V(y) = alpha*||y||^2 - f(y) with f input-convex.

    ``base`` holds the main chain; every weight applied to a previous
    activation (layers 1 and up) is kept nonnegative by :meth:`project`.
    ``skips`` are unconstrained input-to-layer weights, one per layer
    after the first.
    """

    base: MlpParams
    skips: list
    alpha: float

    @classmethod
    def create(cls, dims, alpha, rng, activation="relu", slope=0.2):
        if alpha <= 0:
            raise ConfigError(f"icnn alpha must be positive, got {alpha}")
        if dims[-1] != 1:
            raise ConfigError("icnn convex part must have scalar output")
        base = MlpParams.create(dims, rng, activation=activation, slope=slope)
        d = dims[0]
        for layer in base.layers[1:]:
            # nonnegative start keeps the convexity invariant from step 0
            layer.W.data = np.abs(layer.W.data)
        skips = [
            Tensor(_kaiming_uniform(value_of(base.layers[i].W).shape[0], d, rng),
                   name=f"skips.{i}", check=True)
            for i in range(1, len(base.layers))
        ]
        return cls(base=base, skips=skips, alpha=float(alpha))

    @property
    def in_dim(self):
        return self.base.in_dim

    @property
    def out_dim(self):
        return 1

    def tensors(self):
        out = self.base.tensors()
        for i, s in enumerate(self.skips, start=1):
            out.append((f"skips.{i}", s))
        return out

    def project(self):
        for layer in self.base.layers[1:]:
            np.maximum(layer.W.data, 0.0, out=layer.W.data)


def icnn_convex_part(params, y):
    """f(y): the input-convex piece, shape [batch, 1]."""
    base = params.base
    n_layers = len(base.layers)
    want = ad.shape_of(base.layers[0].W)[1]
    width = ad.shape_of(y)[-1]
    if width != want:
        raise ShapeError(f"icnn expects input width {want}, got {width}")
    z = _activate(ad.affine(y, base.layers[0].W, base.layers[0].b), base)
    for i in range(1, n_layers):
        layer = base.layers[i]
        pre = ad.affine(z, layer.W, layer.b)
        pre = ad.add(pre, ad.matmul(y, ad.transpose(params.skips[i - 1])))
        z = _activate(pre, base) if i < n_layers - 1 else pre
    return z


def icnn_potential(params, y):
    """V(y) = alpha*||y||^2 - f(y), shape [batch]."""
    if params.alpha <= 0:
        raise ConfigError(f"icnn alpha must be positive, got {params.alpha}")
    n = ad.shape_of(y)[0]
    sq = ad.tsum(ad.square(y), axis=1)
    f = ad.reshape(icnn_convex_part(params, y), (n,))
    return ad.sub(ad.mul(sq, params.alpha), f)


def potential_value(params, y):
    """Scalar potential per row, shape [batch], for either potential kind."""
    if isinstance(params, IcnnParams):
        return icnn_potential(params, y)
    out = mlp_forward(params, y)
    return ad.reshape(out, (ad.shape_of(y)[0],))


def convexity_violation(params, rng, n_triples=1000, span=3.0):
    """Worst violation of f(t*y1+(1-t)*y2) <= t*f(y1)+(1-t)*f(y2) on samples.

    Nonpositive (up to float slack) means the convex part is behaving.
    """
    d = params.in_dim
    det = detached(params)
    with ad.stop_recording():
        y1 = rng.uniform(-span, span, size=(n_triples, d))
        y2 = rng.uniform(-span, span, size=(n_triples, d))
        t = rng.uniform(0.0, 1.0, size=(n_triples, 1))
        f1 = icnn_convex_part(det, y1)
        f2 = icnn_convex_part(det, y2)
        fm = icnn_convex_part(det, t * y1 + (1.0 - t) * y2)
        viol = fm - (t * f1 + (1.0 - t) * f2)
        return float(viol.max())


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    lr: float
    beta1: float
    beta2: float
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def create(cls, params, lr, beta1, beta2, eps=1e-8):
        st = cls(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        for name, t in params.tensors():
            st.m[name] = np.zeros(t.shape)
            st.v[name] = np.zeros(t.shape)
        return st


def adam_step(state, params, grads):
    """One bias-corrected Adam update in place; projects ICNN weights after.

    ``grads`` maps parameter name to ndarray (zeros for unreached params).
    """
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for name, tensor in params.tensors():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise GradientError(f"non-finite gradient for parameter {name}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        tensor.data -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    params.project()
