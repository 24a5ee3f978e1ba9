"""Central finite-difference gradient checks."""

from __future__ import annotations

import numpy as np

from mdx.autodiff.tensor import backward


def numerical_grad(fn, tensor, h=1e-5):
    """Central differences of the scalar ``fn()`` with respect to ``tensor.value``."""
    x = tensor.value
    grad = np.zeros(x.shape)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(np.sum(fn().value))
        flat[i] = orig - h
        fm = float(np.sum(fn().value))
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return grad


def relative_error(a, b, floor=0.0):
    """Norm-wise relative error ``|a - b| / max(|a|, |b|)``.

    Returns 0 when both norms are at most ``floor``, i.e. when both gradients
    are indistinguishable from zero at the finite-difference noise level.
    """
    a, b = np.ravel(a), np.ravel(b)
    denom = max(np.linalg.norm(a), np.linalg.norm(b))
    if denom <= floor:
        return 0.0
    return float(np.linalg.norm(a - b) / denom)


def check_gradients(fn, tensors, h=1e-5, floor=0.0):
    """Compare analytic and numerical gradients of ``fn`` for each tensor.

    ``fn`` must rebuild the graph from the current tensor values on every call
    and return a scalar tensor.

    Returns:
        List of relative errors, one per tensor (see :func:`relative_error` for ``floor``).
    """
    for t in tensors:
        t.grad = None
    backward(fn())
    errors = []
    for t in tensors:
        analytic = np.zeros(t.shape) if t.grad is None else t.grad
        errors.append(relative_error(analytic, numerical_grad(fn, t, h), floor))
    return errors
