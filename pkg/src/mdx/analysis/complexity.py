"""Closed-form multiplication counts for the MDX receiver.

One FLOP is one real multiplication; a complex product counts as four.
Additions are excluded, a doubled figure approximates a multiply-add count.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from mdx.errors import ConfigError
from mdx.model.params import ModelConfig, init_params
from mdx.phy.grid import SUBCARRIERS_PER_PRB, SYMBOLS_PER_SLOT, build_grid_layout

BN_MULTS_PER_CHANNEL = 2  # (x - mean) * inv_std * gamma


def lmmse_mult_count(n_tx, n_r):
    """Real multiplications of one LMMSE equalization per RE."""
    if n_tx < 1 or n_r < 1:
        raise ConfigError("n_tx and n_r must be positive")
    return 2 * n_tx**3 + 6 * n_r * n_tx**2 + 6 * n_r * n_tx - 2 * n_tx + 2


def sepconv_mult_count(k, n0, n, F, S):
    """Depthwise ``k x k`` over ``n0`` channels then a 1x1 to ``n`` channels on an ``F x S`` grid."""
    if min(k, F, S) < 1 or n0 < 0 or n < 0:
        raise ConfigError("convolution dimensions must be positive")
    return k * k * n0 * F * S + n0 * n * F * S


@dataclass(frozen=True)
class ComplexityReport:
    flops_total: int
    flops_lmmse: int
    flops_resblocks: int
    flops_demapper: int
    flops_misc: int
    flops_mul_add: int
    param_count: int
    n_rx: int
    n_tx: int
    prbs: int
    kernel_size: int
    filters: int
    bits_per_symbol: int

    def as_row(self):
        return asdict(self)


def resblock_mult_count(cfg: ModelConfig, F, S):
    """Convolution multiplications of the residual stack for one link."""
    k, f = cfg.kernel_size, cfg.filters
    trunk = sepconv_mult_count(k, 8, f, F, S)
    head = sepconv_mult_count(k, f, 2, F, S)
    return cfg.n_blocks * (trunk + head) + (cfg.n_blocks - 1) * head


def model_complexity(n_rx, n_tx, prbs, bits_per_symbol=6, cfg: ModelConfig | None = None):
    """Multiplication budget of one slot through MDX.

    Counted blocks: two LMMSE passes per data RE, the per-link residual
    convolutions over the whole grid, squared distances to every
    constellation point per data RE and layer, and ``misc`` for batch
    normalization, the per-PRB residual weights and data-aided estimation.
    """
    cfg = cfg or ModelConfig()
    F, S = SUBCARRIERS_PER_PRB * prbs, SYMBOLS_PER_SLOT
    layout = build_grid_layout(prbs, min(n_tx, 4))
    D = layout.num_data
    links = n_rx * n_tx
    lmmse = 2 * D * lmmse_mult_count(n_tx, n_rx)
    conv = links * resblock_mult_count(cfg, F, S)
    demap = D * n_tx * (2**bits_per_symbol) * 4
    bn = links * cfg.n_blocks * 4 * BN_MULTS_PER_CHANNEL * F * S
    gamma = links * cfg.n_blocks * 2 * F * S
    da_ls = D * 8 * n_rx * n_tx
    misc = bn + gamma + da_ls
    total = lmmse + conv + demap + misc
    return ComplexityReport(
        flops_total=total, flops_lmmse=lmmse, flops_resblocks=conv, flops_demapper=demap,
        flops_misc=misc, flops_mul_add=2 * total, param_count=init_params(cfg).param_count,
        n_rx=n_rx, n_tx=n_tx, prbs=prbs, kernel_size=cfg.kernel_size, filters=cfg.filters,
        bits_per_symbol=bits_per_symbol,
    )
