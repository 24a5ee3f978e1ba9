"""Reverse-mode automatic differentiation over dense real numpy arrays.

Every operation returns a new :class:`Tensor`. When at least one input
requires a gradient, the output keeps a reference to its inputs and a closure
that maps the output gradient to input gradients. :func:`backward` walks that
graph once in reverse topological order.
"""

from __future__ import annotations

import numpy as np

from mdx.errors import ShapeError


class Tensor:
    """A node in the differentiation graph.

    Attributes:
        value: The forward value (a numpy array).
        grad: Accumulated gradient for leaves with ``requires_grad``; ``None``
            until :func:`backward` reaches the tensor.
        requires_grad: Whether gradients should flow to this tensor.
    """

    __slots__ = ("value", "grad", "requires_grad", "name", "_parents", "_backward")
    __array_priority__ = 100

    def __init__(self, value, requires_grad=False, name=None):
        value = np.asarray(value)
        if not np.issubdtype(value.dtype, np.floating):
            value = value.astype(np.float64)
        self.value = value
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def size(self):
        return self.value.size

    @property
    def is_leaf(self):
        return self._backward is None

    def numpy(self):
        return self.value

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.value)

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return reduce_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return reduce_mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(value, parents, backward_fn):
    """Wrap ``value``; record the backward closure only if a parent needs it."""
    out = Tensor(value)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == tuple(shape):
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _broadcast_shape(*shapes):
    try:
        return np.broadcast_shapes(*shapes)
    except ValueError as exc:
        raise ShapeError(f"cannot broadcast shapes {shapes}") from exc


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return _result(a.value + b.value, (a, b), backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return _result(a.value - b.value, (a, b), backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape)

    def backward(g):
        return unbroadcast(g * b.value, a.shape), unbroadcast(g * a.value, b.shape)

    return _result(a.value * b.value, (a, b), backward)


def broadcast_mul(x, s):
    """Multiply ``x`` by ``s`` where ``s`` is a scalar or matches trailing axes of ``x``."""
    x, s = as_tensor(x), as_tensor(s)
    if s.ndim > x.ndim or (s.ndim and x.shape[x.ndim - s.ndim:] != s.shape):
        raise ShapeError(f"broadcast_mul: {s.shape} is not a trailing shape of {x.shape}")
    return mul(x, s)


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape)
    out = a.value / b.value

    def backward(g):
        ga = unbroadcast(g / b.value, a.shape)
        gb = unbroadcast(-g * out / b.value, b.shape)
        return ga, gb

    return _result(out, (a, b), backward)


def neg(a):
    a = as_tensor(a)
    return _result(-a.value, (a,), lambda g: (-g,))


def reciprocal(a):
    a = as_tensor(a)
    out = 1.0 / a.value
    return _result(out, (a,), lambda g: (-g * out * out,))


def relu(a):
    """Rectified linear unit; the subgradient at zero is taken as zero."""
    a = as_tensor(a)
    mask = a.value > 0

    return _result(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def clip(a, lo=None, hi=None):
    """Clamp to ``[lo, hi]``; the gradient is zero where the clamp is active."""
    a = as_tensor(a)
    out = np.clip(a.value, lo, hi)
    mask = np.ones(a.shape, dtype=bool)
    if lo is not None:
        mask &= a.value >= lo
    if hi is not None:
        mask &= a.value <= hi
    return _result(out, (a,), lambda g: (g * mask,))


# ---------------------------------------------------------------------------
# reductions and shape manipulation


def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def reduce_sum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    axes = _norm_axis(axis, a.ndim)
    out = a.value.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape),)

    return _result(out, (a,), backward)


def reduce_mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    axes = _norm_axis(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    return mul(reduce_sum(a, axes, keepdims), 1.0 / count)


def amin(a, axis=-1):
    """Minimum along one axis; the gradient goes to the (first) minimizing entry."""
    a = as_tensor(a)
    axis = axis % a.ndim
    idx = np.expand_dims(np.argmin(a.value, axis=axis), axis)
    out = np.take_along_axis(a.value, idx, axis=axis).squeeze(axis)

    def backward(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        np.put_along_axis(full, idx, np.expand_dims(g, axis), axis=axis)
        return (full,)

    return _result(out, (a,), backward)


def reshape(a, shape):
    a = as_tensor(a)
    try:
        out = a.value.reshape(shape)
    except ValueError as exc:
        raise ShapeError(str(exc)) from exc
    return _result(out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes=None):
    a = as_tensor(a)
    out = np.transpose(a.value, axes)
    inverse = None if axes is None else tuple(np.argsort(axes))
    return _result(out, (a,), lambda g: (np.transpose(g, inverse),))


def expand_dims(a, axis):
    a = as_tensor(a)
    return reshape(a, np.expand_dims(a.value, axis).shape)


def getitem(a, index):
    a = as_tensor(a)
    out = a.value[index]

    def backward(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        np.add.at(full, index, g)
        return (full,)

    return _result(out, (a,), backward)


def take(a, indices, axis):
    """Gather entries of ``a`` along ``axis`` (indices may be multi-dimensional)."""
    a = as_tensor(a)
    indices = np.asarray(indices)
    axis = axis % a.ndim
    out = np.take(a.value, indices, axis=axis)

    def backward(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        # move the gathered axes to the front so np.add.at can scatter
        moved = np.moveaxis(full, axis, 0)
        gi = np.moveaxis(g, tuple(range(axis, axis + indices.ndim)), tuple(range(indices.ndim)))
        np.add.at(moved, indices, gi)
        return (full,)

    return _result(out, (a,), backward)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != axis
        ):
            raise ShapeError(
                f"concat: shapes {[x.shape for x in tensors]} differ off axis {axis}"
            )
    out = np.concatenate([t.value for t in tensors], axis=axis)
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _result(out, tuple(tensors), backward)


def concat_channels(*tensors):
    """Concatenate along the trailing (channel) axis."""
    return concat(tensors, axis=-1)


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    return concat([expand_dims(t, axis) for t in tensors], axis=axis)


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError("matmul operands need at least two axes")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dims differ, {a.shape} @ {b.shape}")
    _broadcast_shape(a.shape[:-2], b.shape[:-2])

    def backward(g):
        ga = unbroadcast(g @ np.swapaxes(b.value, -1, -2), a.shape)
        gb = unbroadcast(np.swapaxes(a.value, -1, -2) @ g, b.shape)
        return ga, gb

    return _result(a.value @ b.value, (a, b), backward)


# ---------------------------------------------------------------------------
# graph traversal


def _topological_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root, grad=None):
    """Populate ``.grad`` on every leaf that requires a gradient and feeds ``root``.

    Gradients are summed when a tensor is reached along several paths, and
    added to any gradient already stored on a leaf.
    """
    if root.size != 1:
        raise ShapeError(f"backward needs a scalar root, got shape {root.shape}")
    if not root.requires_grad:
        return
    grads = {id(root): np.ones(root.shape) if grad is None else np.asarray(grad, float)}
    for node in reversed(_topological_order(root)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            g = np.asarray(g, dtype=np.float64)
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg
