"""Reverse-mode automatic differentiation on dense float64 arrays.

The graph is rebuilt on every forward pass (define-by-run). Operations
accept a mix of :class:`Tensor` nodes and plain numpy arrays / scalars;
non-Tensor operands are constants and fall out of the graph. While
recording is active, any op touching a Tensor returns a new Tensor that
remembers its parents together with one vector-Jacobian closure per
parent. Inside :func:`stop_recording` (or when no operand is a Tensor)
ops return bare ndarrays, which keeps evaluation-only code paths free of
graph overhead.

Because the vjp closures are themselves written with these ops, calling
:func:`grad` with ``create_graph=True`` yields gradients that carry their
own graph and can be differentiated again. That is how the squared
gradient-norm penalty on the potential is trained.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from .errors import ContractError

_RECORDING = True


@contextmanager
def stop_recording():
    """Disable graph recording inside the block (pure-numpy evaluation)."""
    global _RECORDING
    saved = _RECORDING
    _RECORDING = False
    try:
        yield
    finally:
        _RECORDING = saved


class Tensor:
    """A node in the recorded computation graph.

    ``data`` is always a float64 ndarray. Leaf tensors (parameters,
    differentiable inputs) are created directly; interior nodes are
    created by the ops below and hold ``(parent, vjp)`` pairs.
    """

    __slots__ = ("data", "parents", "name")

    def __init__(self, data, name=None, check=False):
        arr = np.asarray(data, dtype=np.float64)
        if check and not np.all(np.isfinite(arr)):
            raise ContractError(
                f"non-finite entries in tensor{' ' + name if name else ''}"
            )
        self.data = arr
        self.parents = ()
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        nm = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{nm})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)


def value_of(a):
    """Underlying ndarray (or scalar) of a Tensor or constant."""
    return a.data if type(a) is Tensor else a


def shape_of(a):
    return np.shape(a.data if type(a) is Tensor else a)


def _wrap(data, parents):
    out = Tensor.__new__(Tensor)
    out.data = np.asarray(data, dtype=np.float64)
    out.parents = parents
    out.name = None
    return out


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------


def add(a, b):
    ta, tb = type(a) is Tensor, type(b) is Tensor
    out = (a.data if ta else a) + (b.data if tb else b)
    if _RECORDING and (ta or tb):
        ps = []
        if ta:
            sa = a.data.shape
            ps.append((a, lambda g: _unbroadcast(g, sa)))
        if tb:
            sb = b.data.shape
            ps.append((b, lambda g: _unbroadcast(g, sb)))
        return _wrap(out, tuple(ps))
    return out


def sub(a, b):
    ta, tb = type(a) is Tensor, type(b) is Tensor
    out = (a.data if ta else a) - (b.data if tb else b)
    if _RECORDING and (ta or tb):
        ps = []
        if ta:
            sa = a.data.shape
            ps.append((a, lambda g: _unbroadcast(g, sa)))
        if tb:
            sb = b.data.shape
            ps.append((b, lambda g: _unbroadcast(neg(g), sb)))
        return _wrap(out, tuple(ps))
    return out


def neg(a):
    if type(a) is Tensor:
        out = -a.data
        if _RECORDING:
            return _wrap(out, ((a, neg),))
        return out
    return -a


def mul(a, b):
    ta, tb = type(a) is Tensor, type(b) is Tensor
    out = (a.data if ta else a) * (b.data if tb else b)
    if _RECORDING and (ta or tb):
        ps = []
        if ta:
            sa = a.data.shape
            ps.append((a, lambda g: _unbroadcast(mul(g, b), sa)))
        if tb:
            sb = b.data.shape
            ps.append((b, lambda g: _unbroadcast(mul(g, a), sb)))
        return _wrap(out, tuple(ps))
    return out


def square(a):
    v = value_of(a)
    out = v * v
    if _RECORDING and type(a) is Tensor:
        return _wrap(out, ((a, lambda g: mul(g, mul(a, 2.0))),))
    return out


def matmul(a, b):
    ta, tb = type(a) is Tensor, type(b) is Tensor
    out = (a.data if ta else a) @ (b.data if tb else b)
    if _RECORDING and (ta or tb):
        ps = []
        if ta:
            ps.append((a, lambda g: matmul(g, transpose(b))))
        if tb:
            ps.append((b, lambda g: matmul(transpose(a), g)))
        return _wrap(out, tuple(ps))
    return out


def affine(x, W, b):
    """Fused x @ W.T + b for [batch, in] inputs; the hot path of every net."""
    tx, tw, tb = type(x) is Tensor, type(W) is Tensor, type(b) is Tensor
    xv = x.data if tx else x
    Wv = W.data if tw else W
    out = xv @ Wv.T
    out += b.data if tb else b
    if _RECORDING and (tx or tw or tb):
        ps = []
        if tx:
            ps.append((x, lambda g: matmul(g, W)))
        if tw:
            ps.append((W, lambda g: matmul(transpose(g), x)))
        if tb:
            ps.append((b, lambda g: tsum(g, axis=0)))
        return _wrap(out, tuple(ps))
    return out


def transpose(a):
    if type(a) is Tensor:
        out = np.swapaxes(a.data, -1, -2)
        if _RECORDING:
            return _wrap(out, ((a, transpose),))
        return out
    return np.swapaxes(a, -1, -2)


def reshape(a, shape):
    v = value_of(a)
    out = np.reshape(v, shape)
    if _RECORDING and type(a) is Tensor:
        old = v.shape
        return _wrap(out, ((a, lambda g: reshape(g, old)),))
    return out


def broadcast_to(a, shape):
    v = value_of(a)
    out = np.broadcast_to(v, shape)
    if _RECORDING and type(a) is Tensor:
        old = v.shape
        return _wrap(out, ((a, lambda g: _unbroadcast(g, old)),))
    return out


def tsum(a, axis=None, keepdims=False):
    v = value_of(a)
    out = v.sum(axis=axis, keepdims=keepdims)
    if _RECORDING and type(a) is Tensor:
        old = v.shape

        def vjp(g):
            if axis is not None and not keepdims:
                g = reshape(g, _keepdims_shape(old, axis))
            return broadcast_to(g, old)

        return _wrap(out, ((a, vjp),))
    return out


def tmean(a, axis=None, keepdims=False):
    shape = shape_of(a)
    if axis is None:
        n = int(np.prod(shape))
    else:
        n = int(np.prod([shape[ax] for ax in np.atleast_1d(axis)]))
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def relu(a):
    v = value_of(a)
    out = np.maximum(v, 0.0)
    if _RECORDING and type(a) is Tensor:
        mask = v > 0  # bool mask; promotes to float in the vjp product
        return _wrap(out, ((a, lambda g: mul(g, mask)),))
    return out


def leaky_relu(a, slope=0.2):
    v = value_of(a)
    fac = np.where(v > 0, 1.0, slope)
    out = v * fac
    if _RECORDING and type(a) is Tensor:
        return _wrap(out, ((a, lambda g: mul(g, fac)),))
    return out


def _keepdims_shape(shape, axis):
    axes = {ax % len(shape) for ax in np.atleast_1d(axis)}
    return tuple(1 if i in axes else s for i, s in enumerate(shape))


def _unbroadcast(g, target_shape):
    """Reduce gradient g back to target_shape (reverse of broadcasting)."""
    gs = shape_of(g)
    target_shape = tuple(target_shape)
    if gs == target_shape:
        return g
    extra = len(gs) - len(target_shape)
    if extra > 0:
        g = tsum(g, axis=tuple(range(extra)))
        gs = shape_of(g)
    narrow = tuple(
        i for i, (have, want) in enumerate(zip(gs, target_shape)) if want == 1 and have != 1
    )
    if narrow:
        g = tsum(g, axis=narrow, keepdims=True)
    if shape_of(g) != target_shape:
        g = reshape(g, target_shape)
    return g


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------


def grad(output, wrt, create_graph=False):
    """Gradients of a scalar ``output`` with respect to each tensor in ``wrt``.

    Parameters never reached by the graph get a zero gradient. With
    ``create_graph=True`` the returned gradients are themselves recorded
    Tensors and support a further :func:`grad` call (used for the
    gradient-norm penalty).
    """
    if type(output) is not Tensor:
        raise ContractError("loss does not depend on any recorded tensor")
    if output.size != 1:
        raise ContractError(f"loss must be scalar, got shape {output.shape}")

    topo = []
    seen = set()
    stack = [(output, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    wanted = {id(w) for w in wrt}
    grads = {id(output): np.ones(output.shape)}
    collected = {}

    def sweep():
        # Topological order guarantees each node is popped only after all
        # of its consumers have contributed to its gradient.
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if id(node) in wanted:
                collected[id(node)] = g
            for parent, vjp in node.parents:
                pg = vjp(g)
                acc = grads.get(id(parent))
                grads[id(parent)] = pg if acc is None else add(acc, pg)

    if create_graph:
        sweep()
    else:
        with stop_recording():
            sweep()

    out = []
    for w in wrt:
        g = collected.get(id(w))
        if g is None:
            g = np.zeros(w.shape)
        out.append(g)
    return out
