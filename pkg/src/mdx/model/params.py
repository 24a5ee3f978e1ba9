"""Learnable MDX parameters and their initialization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mdx.autodiff import BatchNormState, Tensor
from mdx.errors import ConfigError
from mdx.phy.grid import SUBCARRIERS_PER_PRB, SYMBOLS_PER_SLOT

MODULATION_ORDERS = (2, 4, 6)
PRB_SHAPE = (SUBCARRIERS_PER_PRB, SYMBOLS_PER_SLOT)


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters (defaults follow the reference design)."""

    n_blocks: int = 4
    filters: int = 8
    kernel_size: int = 3
    pe_freq_norm: float = 12.0
    pe_time_norm: float = 14.0
    modulation_orders: tuple = MODULATION_ORDERS
    param_dtype: str = "float32"

    def __post_init__(self):
        if self.n_blocks < 1 or self.filters < 1:
            raise ConfigError("n_blocks and filters must be positive")
        if self.kernel_size % 2 == 0:
            raise ConfigError("kernel_size must be odd")

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "modulation_orders" in d:
            d["modulation_orders"] = tuple(d["modulation_orders"])
        return cls(**d)


def block_param_shapes(cfg: ModelConfig, block: int):
    """Shapes of the convolution and BN tensors of one residual block."""
    k, f = cfg.kernel_size, cfg.filters
    io = 4  # A and B, real and imaginary parts
    width = io + 4  # after concatenating the positional encoding
    shapes = {
        "bn_gamma": (io,),
        "bn_beta": (io,),
        "trunk_dw": (k, k, width),
        "trunk_dw_b": (width,),
        "trunk_pw": (width, f),
        "trunk_pw_b": (f,),
        "a_dw": (k, k, f),
        "a_dw_b": (f,),
        "a_pw": (f, 2),
        "a_pw_b": (2,),
    }
    if block < cfg.n_blocks - 1:
        shapes.update({"b_dw": (k, k, f), "b_dw_b": (f,), "b_pw": (f, 2), "b_pw_b": (2,)})
    return shapes


@dataclass
class MdxParams:
    """Named parameter tensors plus per-block batch-norm running statistics."""

    config: ModelConfig
    tensors: dict
    bn: list = field(default_factory=list)

    def __getitem__(self, name):
        return self.tensors[name]

    def block(self, l, name):
        return self.tensors[f"block{l}.{name}"]

    @property
    def param_count(self):
        return int(sum(t.size for t in self.tensors.values()))

    def gamma_index(self, bits_per_symbol):
        try:
            return self.config.modulation_orders.index(bits_per_symbol)
        except ValueError:
            raise ConfigError(f"no demapper scale for {bits_per_symbol} bits/symbol") from None

    def zero_grad(self):
        for t in self.tensors.values():
            t.grad = None

    def grads(self):
        return {k: t.grad for k, t in self.tensors.items()}

    def copy(self):
        tensors = {k: Tensor(t.value.copy(), requires_grad=True, name=k) for k, t in self.tensors.items()}
        bn = [BatchNormState(s.mean.copy(), s.var.copy(), s.momentum, s.eps) for s in self.bn]
        return MdxParams(self.config, tensors, bn)

    def as_dtype(self, dtype):
        out = self.copy()
        for t in out.tensors.values():
            t.value = t.value.astype(dtype)
        return out


def init_params(cfg: ModelConfig | None = None, seed=0):
    """Fresh parameters.

    Psi, Phi and gamma start at one and the per-PRB residual weights Gamma at
    zero, so the residual stack is initially the identity on its A input.
    Convolution kernels are drawn uniformly with variance ``1 / fan_in``;
    biases and BN shifts start at zero, BN scales at one.
    """
    cfg = cfg or ModelConfig()
    dtype = np.dtype(cfg.param_dtype)
    rng = np.random.default_rng(seed)
    values = {
        "psi_dals": np.ones(PRB_SHAPE),
        "psi_d": np.ones(PRB_SHAPE),
        "phi": np.ones(PRB_SHAPE),
        "gamma": np.ones(len(cfg.modulation_orders)),
        "Gamma": np.zeros((cfg.n_blocks,) + PRB_SHAPE),
    }
    for l in range(cfg.n_blocks):
        for name, shape in block_param_shapes(cfg, l).items():
            if name == "bn_gamma":
                v = np.ones(shape)
            elif name.endswith("_b") or name == "bn_beta":
                v = np.zeros(shape)
            else:
                fan_in = shape[0] * shape[1] if name.endswith("_dw") else shape[0]
                bound = np.sqrt(3.0 / fan_in)
                v = rng.uniform(-bound, bound, size=shape)
            values[f"block{l}.{name}"] = v
    tensors = {k: Tensor(v.astype(dtype), requires_grad=True, name=k) for k, v in values.items()}
    bn = [BatchNormState.fresh(4) for _ in range(cfg.n_blocks)]
    return MdxParams(cfg, tensors, bn)
