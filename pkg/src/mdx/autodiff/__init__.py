"""Minimal reverse-mode automatic differentiation."""

from mdx.autodiff.complex import ComplexPair
from mdx.autodiff.gradcheck import check_gradients, numerical_grad, relative_error
from mdx.autodiff.linalg import hermitian_solve
from mdx.autodiff.nn import (
    BatchNormState,
    MultCounter,
    batch_norm,
    bce_with_logits,
    conv2d_separable,
    depthwise_conv2d,
    pointwise_conv2d,
)
from mdx.autodiff.optim import AdamState, adam_step
from mdx.autodiff.tensor import (
    Tensor,
    add,
    amin,
    backward,
    broadcast_mul,
    clip,
    concat,
    concat_channels,
    div,
    matmul,
    mul,
    reciprocal,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    sub,
    take,
    transpose,
)

__all__ = [
    "AdamState", "BatchNormState", "ComplexPair", "MultCounter", "Tensor", "adam_step",
    "add", "amin", "backward", "batch_norm", "bce_with_logits", "broadcast_mul",
    "check_gradients", "clip", "concat", "concat_channels", "conv2d_separable",
    "depthwise_conv2d", "div", "hermitian_solve", "matmul", "mul", "numerical_grad",
    "pointwise_conv2d", "reciprocal", "reduce_mean", "reduce_sum", "relative_error",
    "relu", "reshape", "sub", "take", "transpose",
]
