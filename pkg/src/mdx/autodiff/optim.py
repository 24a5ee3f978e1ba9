"""Adam optimizer with bias-corrected moments."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mdx.errors import ShapeError


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state: AdamState):
    """Apply one Adam update in place.

    Args:
        params: Mapping ``name -> Tensor``.
        grads: Mapping ``name -> ndarray``; a missing or ``None`` entry is
            treated as a zero gradient.
        state: Moments and hyperparameters, updated in place.

    Returns:
        ``state`` (for chaining).
    """
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros(p.shape)
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, param {p.shape}")
        m = state.m.setdefault(name, np.zeros(p.shape))
        v = state.v.setdefault(name, np.zeros(p.shape))
        if m.shape != p.shape or v.shape != p.shape:
            raise ShapeError(f"optimizer moments for {name} do not match {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        update = state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.value = (p.value.astype(np.float64) - update).astype(p.value.dtype)
    return state
