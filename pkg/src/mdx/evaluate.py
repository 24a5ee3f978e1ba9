"""Monte-Carlo evaluation of MDX against the classical receivers."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from mdx.analysis.metrics import MetricAccumulator
from mdx.errors import ConfigError
from mdx.model import MdxParams, mdx_forward
from mdx.receiver import BaselineKind, estimate_noise_variance, gather_data, run_baseline
from mdx.sim import ChannelConfig, simulate_batch

RECEIVERS = ("mdx", "ls_lmmse", "perfect_csi_lmmse")


@dataclass(frozen=True)
class EvalConfig:
    prbs: int = 1
    n_rx: int = 4
    n_layers: int = 2
    bits_per_symbol: int = 2
    snr_db: tuple = (10.0,)
    n_slots: int = 500
    batch_size: int = 50
    noise_estimate: str = "estimate"
    seed: int = 1
    receivers: tuple = RECEIVERS
    dmrs_symbols: tuple = (2, 11)
    channel: ChannelConfig = field(default_factory=ChannelConfig)

    def __post_init__(self):
        if not self.snr_db:
            raise ConfigError("snr list must be nonempty")
        if self.n_slots < 1 or self.batch_size < 1:
            raise ConfigError("n_slots and batch_size must be positive")
        if self.noise_estimate not in ("estimate", "genie"):
            raise ConfigError(f"unknown noise estimate mode {self.noise_estimate!r}")
        unknown = set(self.receivers) - set(RECEIVERS)
        if unknown:
            raise ConfigError(f"unknown receivers {sorted(unknown)}")

    def to_dict(self):
        return json.loads(json.dumps(asdict(self)))

    def config_hash(self):
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def _add(acc, snr, llr, bits, H_hat=None, H_true=None):
    """Hard decisions from LLRs; a slot counts as one block for the uncoded block error rate."""
    errs = ((llr > 0).astype(np.int8) != bits).reshape(bits.shape[0], -1).sum(axis=1)
    sq, cnt = 0.0, 0
    if H_hat is not None:
        d = H_hat - H_true
        sq, cnt = float(np.sum(np.abs(d) ** 2)), d.size
    acc.add(snr, bit_errors=errs.sum(), n_bits=bits.size, block_errors=np.count_nonzero(errs),
            n_blocks=bits.shape[0], sq_error=sq, sq_count=cnt, n_slots=bits.shape[0])


def evaluate(cfg: EvalConfig, params: MdxParams | None = None):
    """Run every configured receiver over the same simulated slots.

    Slots at SNR index ``i`` use streams ``(seed, i * n_slots + t)``, so all
    receivers and all re-runs see identical realizations.

    Returns:
        Dict mapping receiver name to :class:`MetricAccumulator`. The MDX
        channel MSE is that of the refined estimate; the LS+LMMSE one is that
        of the interpolated pilot estimate, both over data REs.
    """
    if "mdx" in cfg.receivers and params is None:
        raise ConfigError("evaluating mdx requires model parameters")
    accs = {r: MetricAccumulator() for r in cfg.receivers}
    for i, snr in enumerate(cfg.snr_db):
        for start in range(0, cfg.n_slots, cfg.batch_size):
            T = min(cfg.batch_size, cfg.n_slots - start)
            b = simulate_batch(cfg.prbs, cfg.n_layers, cfg.bits_per_symbol, cfg.n_rx,
                               np.full(T, float(snr)), cfg.channel, cfg.seed,
                               i * cfg.n_slots + start, tuple(cfg.dmrs_symbols))
            if cfg.noise_estimate == "genie":
                nv = b.noise_var
            else:
                nv = estimate_noise_variance(b.Y, b.pilots, b.layout)
            H_true = gather_data(b.H, b.layout)
            if "mdx" in accs:
                out = mdx_forward(b.Y, b.pilots, b.layout, nv, params, b.constellation, mode="infer")
                Hnn = gather_data(out.H_nn.numpy(), b.layout)
                _add(accs["mdx"], snr, out.llr_final.value, b.bits, Hnn, H_true)
            if "ls_lmmse" in accs:
                g = run_baseline(BaselineKind.LS_LMMSE, b.Y, b.layout, b.pilots, nv, b.constellation)
                _add(accs["ls_lmmse"], snr, g.llr, b.bits, gather_data(g.H_hat, b.layout), H_true)
            if "perfect_csi_lmmse" in accs:
                g = run_baseline(BaselineKind.PERFECT_CSI_LMMSE, b.Y, b.layout, b.pilots, nv,
                                 b.constellation, H_true=b.H)
                _add(accs["perfect_csi_lmmse"], snr, g.llr, b.bits)
    return accs
