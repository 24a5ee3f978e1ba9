"""Finite-difference gradient suite over every differentiable op and the full model loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mdx import autodiff as ad
from mdx.autodiff import tensor as T
from mdx.autodiff.complex import ComplexPair
from mdx.autodiff.complex import concat as complex_concat
from mdx.autodiff.gradcheck import check_gradients
from mdx.model import ModelConfig, init_params
from mdx.sim import ChannelConfig, simulate_batch

OP_TOL = 1e-5
END_TO_END_TOL = 1e-4
# Central differences of an O(1) loss carry ~1e-10 rounding noise at h = 1e-6.
# Biases feeding a batch norm have an exactly zero gradient and fall below this.
GRAD_NOISE_FLOOR = 1e-8


@dataclass(frozen=True)
class GradcheckRow:
    name: str
    max_rel_error: float
    tol: float

    @property
    def passed(self):
        return self.max_rel_error < self.tol


def _t(rng, shape, offset=0.0, spread=1.0):
    return ad.Tensor(offset + spread * rng.standard_normal(shape), requires_grad=True)


def _away_from_zero(rng, shape):
    """Values with magnitude in [0.2, 1.2] so kinks at zero are never straddled."""
    mag = rng.uniform(0.2, 1.2, shape)
    return ad.Tensor(mag * rng.choice([-1.0, 1.0], shape), requires_grad=True)


def _cpair(rng, shape):
    return ComplexPair.from_numpy(rng.standard_normal(shape) + 1j * rng.standard_normal(shape), True)


def op_cases(seed=0):
    """``(name, fn, tensors)`` triples, one per op, each with a random projection."""
    rng = np.random.default_rng(seed)
    cases = []

    def add(name, fn, tensors, out_shape):
        w = rng.standard_normal(out_shape)
        cases.append((name, lambda: T.reduce_sum(T.mul(fn(), w)), tensors))

    a, b = _t(rng, (3, 4)), _t(rng, (4,), offset=3.0)
    add("add", lambda: T.add(a, b), [a, b], (3, 4))
    add("sub", lambda: T.sub(a, b), [a, b], (3, 4))
    add("mul", lambda: T.mul(a, b), [a, b], (3, 4))
    add("div", lambda: T.div(a, b), [a, b], (3, 4))
    add("reciprocal", lambda: T.reciprocal(b), [b], (4,))
    s = _t(rng, (4,))
    add("broadcast_mul", lambda: T.broadcast_mul(a, s), [a, s], (3, 4))
    r = _away_from_zero(rng, (3, 5))
    add("relu", lambda: T.relu(r), [r], (3, 5))
    c = ad.Tensor(np.linspace(-3, 3, 12).reshape(3, 4) + 0.05, requires_grad=True)
    add("clip", lambda: T.clip(c, -2.0, 2.0), [c], (3, 4))
    add("reduce_sum", lambda: T.reduce_sum(a, axis=1), [a], (3,))
    add("reduce_mean", lambda: T.reduce_mean(a, axis=0), [a], (4,))
    m = ad.Tensor(rng.permutation(15).reshape(3, 5) * 0.3, requires_grad=True)
    add("amin", lambda: T.amin(m, axis=-1), [m], (3,))
    add("reshape", lambda: T.reshape(a, (2, 6)), [a], (2, 6))
    add("transpose", lambda: T.transpose(a, (1, 0)), [a], (4, 3))
    add("take", lambda: T.take(a, np.array([[0, 2], [3, 3]]), axis=1), [a], (3, 2, 2))
    d = _t(rng, (3, 2))
    add("concat", lambda: T.concat([a, d], axis=-1), [a, d], (3, 6))
    p, q = _t(rng, (2, 3, 4)), _t(rng, (2, 4, 2))
    add("matmul", lambda: T.matmul(p, q), [p, q], (2, 3, 2))

    x = _t(rng, (2, 4, 5, 3))
    dw, dwb = _t(rng, (3, 3, 3)), _t(rng, (3,))
    pw, pwb = _t(rng, (3, 2)), _t(rng, (2,))
    add("depthwise_conv2d", lambda: ad.depthwise_conv2d(x, dw, dwb), [x, dw, dwb], (2, 4, 5, 3))
    add("pointwise_conv2d", lambda: ad.pointwise_conv2d(x, pw, pwb), [x, pw, pwb], (2, 4, 5, 2))
    g, be = _t(rng, (3,)), _t(rng, (3,))
    add("batch_norm", lambda: ad.batch_norm(x, g, be, ad.BatchNormState.fresh(3), update_stats=False),
        [x, g, be], (2, 4, 5, 3))
    lg = _t(rng, (4, 3), spread=3.0)
    tgt = rng.integers(0, 2, (4, 3))
    add("bce_with_logits", lambda: ad.bce_with_logits(lg, tgt), [lg], (4, 3))

    z1, z2 = _cpair(rng, (2, 3)), _cpair(rng, (2, 3))

    def cplx(fn, shape):
        w_re, w_im = rng.standard_normal(shape), rng.standard_normal(shape)

        def f():
            out = fn()
            return T.add(T.reduce_sum(T.mul(out.re, w_re)), T.reduce_sum(T.mul(out.im, w_im)))
        return f

    cases.append(("complex_mul", cplx(lambda: z1 * z2.conj(), (2, 3)),
                  [z1.re, z1.im, z2.re, z2.im]))
    cases.append(("complex_concat", cplx(lambda: complex_concat([z1, z2], axis=0), (4, 3)),
                  [z1.re, z2.im]))
    w = rng.standard_normal((2, 3))
    cases.append(("complex_abs2", lambda: T.reduce_sum(T.mul(z1.abs2(), w)), [z1.re, z1.im]))

    M, B = _cpair(rng, (2, 3, 3)), _cpair(rng, (2, 3, 2))
    eye = ComplexPair.from_numpy(np.eye(3))
    cases.append(("hermitian_solve", cplx(lambda: ad.hermitian_solve(M.herm() @ M + eye, B), (2, 3, 2)),
                  [M.re, M.im, B.re, B.im]))
    return cases


def end_to_end_case(seed=0, n_rx=2, n_tx=1, prbs=1, snr_db=5.0):
    """Full training loss of a float64 model with random residual weights.

    Batch-norm running statistics are frozen so that repeated evaluations
    see the same function.
    """
    from mdx.train.loop import training_step

    b = simulate_batch(prbs, n_tx, 2, n_rx, [snr_db, snr_db + 4.0], ChannelConfig(), seed)
    params = init_params(ModelConfig(param_dtype="float64"), seed)
    rng = np.random.default_rng([seed, 1])
    params["Gamma"].value[:] = rng.normal(0.0, 0.5, params["Gamma"].shape)
    for name in ("psi_dals", "psi_d", "phi"):
        params[name].value[:] += rng.uniform(-0.2, 0.2, params[name].shape)

    def fn():
        return training_step(params, b, b.noise_var, 0.01, update_stats=False)[0]

    return fn, list(params.tensors.values())


def run_gradient_suite(seed=0, h=1e-6, end_to_end=True):
    rows = [GradcheckRow(name, max(check_gradients(fn, ts, h)), OP_TOL)
            for name, fn, ts in op_cases(seed)]
    if end_to_end:
        fn, ts = end_to_end_case(seed)
        errs = check_gradients(fn, ts, h, floor=GRAD_NOISE_FLOOR)
        rows.append(GradcheckRow("mdx_loss", max(errs), END_TO_END_TOL))
    return rows
