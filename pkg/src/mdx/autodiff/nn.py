"""Convolution, batch normalization and loss primitives on channels-last tensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mdx.autodiff.tensor import Tensor, _result, add, as_tensor, matmul
from mdx.errors import ConfigError, ShapeError, StateError

LN2 = np.log(2.0)


class MultCounter:
    """Tally of real multiplications performed by instrumented kernels."""

    def __init__(self):
        self.count = 0

    def add(self, n):
        self.count += int(n)


def depthwise_conv2d(x, kernel, bias=None, counter=None):
    """Per-channel 2-D cross-correlation with zero "same" padding and stride 1.

    Args:
        x: Input of shape ``(..., H, W, C)``.
        kernel: Filter of shape ``(k, k, C)`` with ``k`` odd.
        bias: Optional per-channel bias of shape ``(C,)``.
        counter: Optional :class:`MultCounter`; receives ``k*k*H*W*C`` per
            leading batch element.

    Returns:
        Tensor of shape ``(..., H, W, C)``.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    k = kernel.shape[0]
    if kernel.ndim != 3 or kernel.shape[1] != k:
        raise ShapeError(f"depthwise kernel must be (k, k, C), got {kernel.shape}")
    if k % 2 == 0:
        raise ConfigError(f"kernel size must be odd, got {k}")
    if x.ndim < 3 or x.shape[-1] != kernel.shape[-1]:
        raise ShapeError(f"input {x.shape} does not match kernel channels {kernel.shape}")
    p = k // 2
    H, W = x.shape[-3], x.shape[-2]
    pad = [(0, 0)] * (x.ndim - 3) + [(p, p), (p, p), (0, 0)]
    xp = np.pad(x.value, pad)
    w = kernel.value
    out = np.zeros(x.shape)
    for a in range(k):
        for b in range(k):
            out += xp[..., a:a + H, b:b + W, :] * w[a, b]
    if counter is not None:
        counter.add(k * k * x.size)

    def backward(g):
        gxp = np.zeros(xp.shape, dtype=g.dtype)
        gw = np.empty(w.shape, dtype=g.dtype)
        lead = tuple(range(g.ndim - 1))
        for a in range(k):
            for b in range(k):
                gxp[..., a:a + H, b:b + W, :] += g * w[a, b]
                gw[a, b] = np.sum(xp[..., a:a + H, b:b + W, :] * g, axis=lead)
        return gxp[..., p:p + H, p:p + W, :], gw

    y = _result(out, (x, kernel), backward)
    return y if bias is None else add(y, bias)


def pointwise_conv2d(x, weight, bias=None, counter=None):
    """1x1 convolution mixing channels: ``(..., C_in) @ (C_in, C_out) + bias``."""
    x, weight = as_tensor(x), as_tensor(weight)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise ShapeError(f"pointwise weight {weight.shape} vs input {x.shape}")
    if counter is not None:
        counter.add(x.size * weight.shape[1])
    y = matmul(x, weight)
    return y if bias is None else add(y, bias)


def conv2d_separable(x, depthwise_kernel, pointwise_kernel, depthwise_bias=None,
                     pointwise_bias=None, counter=None):
    """Depthwise ``k x k`` convolution followed by a 1x1 pointwise convolution.

    ``pointwise_kernel`` may be given as ``(C_in, C_out)`` or ``(1, 1, C_in, C_out)``.
    """
    pw = as_tensor(pointwise_kernel)
    if pw.ndim == 4:
        if pw.shape[:2] != (1, 1):
            raise ShapeError(f"pointwise kernel must be 1x1, got {pw.shape}")
        pw = pw.reshape(pw.shape[2:])
    h = depthwise_conv2d(x, depthwise_kernel, depthwise_bias, counter)
    return pointwise_conv2d(h, pw, pointwise_bias, counter)


@dataclass
class BatchNormState:
    """Running per-channel statistics used in inference mode."""

    mean: np.ndarray | None = None
    var: np.ndarray | None = None
    momentum: float = 0.1
    eps: float = 1e-3

    @classmethod
    def fresh(cls, channels, momentum=0.1, eps=1e-3):
        return cls(np.zeros(channels), np.ones(channels), momentum, eps)

    @property
    def initialized(self):
        return self.mean is not None and self.var is not None


def batch_norm(x, gamma, beta, state: BatchNormState, mode="train", update_stats=True):
    """Normalize per channel (trailing axis) over all other axes.

    In ``train`` mode the batch statistics are used and, when
    ``update_stats`` is set, folded into ``state`` with its momentum. In
    ``infer`` mode the running statistics in ``state`` are used.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    C = x.shape[-1]
    if gamma.shape != (C,) or beta.shape != (C,):
        raise ShapeError(f"BN affine shapes {gamma.shape}, {beta.shape} vs {C} channels")
    eps = state.eps
    if mode == "infer":
        if not state.initialized:
            raise StateError("batch norm running statistics are not initialized")
        inv_std = 1.0 / np.sqrt(state.var + eps)
        xhat = (x - Tensor(state.mean)) * Tensor(inv_std)
        return xhat * gamma + beta
    if mode != "train":
        raise ConfigError(f"unknown batch norm mode {mode!r}")

    axes = tuple(range(x.ndim - 1))
    n = x.size // C
    mean = x.value.mean(axis=axes)
    var = x.value.var(axis=axes)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.value - mean) * inv_std
    if update_stats:
        m = state.momentum
        if not state.initialized:
            state.mean, state.var = np.zeros(C), np.ones(C)
        state.mean = (1 - m) * state.mean + m * mean
        state.var = (1 - m) * state.var + m * var
    g_val, b_val = gamma.value, beta.value

    def backward(g):
        dxhat = g * g_val
        dgamma = np.sum(g * xhat, axis=axes)
        dbeta = np.sum(g, axis=axes)
        dx = inv_std / n * (
            n * dxhat - dxhat.sum(axis=axes) - xhat * np.sum(dxhat * xhat, axis=axes)
        )
        return dx, dgamma, dbeta

    return _result(xhat * g_val + b_val, (x, gamma, beta), backward)


def bce_with_logits(logit, target):
    """Per-element binary cross-entropy in bits, ``p = sigmoid(logit)``.

    Stable for large ``|logit|``. The gradient is ``(sigmoid(logit) - target) / ln 2``.
    """
    logit = as_tensor(logit)
    t = np.asarray(target, dtype=np.float64)
    if t.shape != logit.shape:
        raise ShapeError(f"target {t.shape} vs logit {logit.shape}")
    z = logit.value
    # softplus(z) - t*z, computed without overflow
    loss = (np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - t * z) / LN2
    sig = 0.5 * (1.0 + np.tanh(0.5 * z))

    return _result(loss, (logit,), lambda g: (g * (sig - t) / LN2,))

