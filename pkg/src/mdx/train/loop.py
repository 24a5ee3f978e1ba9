"""End-to-end training over randomized drops."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from mdx.autodiff import AdamState, adam_step, backward
from mdx.channel.drops import sample_layer_count
from mdx.errors import ConfigError, NumericalError, SingularError, TrainingDivergedError
from mdx.model import ModelConfig, MdxParams, init_params, mdx_forward
from mdx.receiver import estimate_noise_variance, gather_data
from mdx.sim import ChannelConfig, simulate_batch
from mdx.train.checkpoint import save_checkpoint
from mdx.train.losses import bce_loss, mse_loss, total_loss

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("iteration", "loss", "bce_d", "bce_dals", "mse", "mean_snr_db")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    iterations: int = 2000
    lr: float = 1e-3
    lam: float = 0.01
    snr_range_db: tuple = (-4.0, 16.0)
    prbs: int = 4
    modulations: tuple = (2, 4, 6)
    n_rx: int = 4
    max_layers: int = 2
    randomize_layers: bool = True
    dmrs_symbols: tuple = (2, 11)
    noise_estimate: str = "estimate"
    seed: int = 0
    checkpoint_every: int = 0
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.lam < 0:
            raise ConfigError("lambda must be non-negative")
        if self.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if self.snr_range_db[0] > self.snr_range_db[1]:
            raise ConfigError("snr range is not ordered")
        if self.noise_estimate not in ("estimate", "genie"):
            raise ConfigError(f"unknown noise estimate mode {self.noise_estimate!r}")
        if not self.modulations:
            raise ConfigError("need at least one modulation order")

    def to_dict(self):
        d = asdict(self)
        return json.loads(json.dumps(d))

    def config_hash(self):
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class TrainResult:
    params: MdxParams
    adam: AdamState
    trace: list


def batch_plan(cfg: TrainConfig, iteration):
    """Layer count, modulation and per-slot SNRs of one iteration (shared within the batch)."""
    rng = np.random.default_rng([cfg.seed, iteration, 1])
    n_layers = sample_layer_count(cfg.max_layers, rng) if cfg.randomize_layers else cfg.max_layers
    bits = int(cfg.modulations[rng.integers(len(cfg.modulations))])
    snr_db = rng.uniform(*cfg.snr_range_db, size=cfg.batch_size)
    return n_layers, bits, snr_db


def training_step(params: MdxParams, batch, noise_var, lam, update_stats=True):
    """Forward and loss terms for one simulated batch (no parameter update)."""
    out = mdx_forward(batch.Y, batch.pilots, batch.layout, noise_var, params, batch.constellation,
                      mode="train", update_stats=update_stats)
    bce_d = bce_loss(out.llr_final, batch.bits)
    bce_dals = bce_loss(out.llr_intermediate, batch.bits)
    flat = out.H_nn.reshape((out.H_nn.shape[0], -1) + out.H_nn.shape[3:])
    Hd = flat.take(batch.layout.data_indices, axis=1)
    mse = mse_loss(Hd, gather_data(batch.H, batch.layout))
    loss = total_loss(bce_d, bce_dals, mse, batch.snr_db, lam)
    return loss, bce_d, bce_dals, mse


def write_trace(path, trace, extra=None):
    """Loss trace CSV; ``extra`` columns (e.g. config hash, seed) are repeated on every row."""
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(TRACE_COLUMNS) + list(extra))
        for row in trace:
            vals = [row["iteration"]] + [repr(float(row[c])) for c in TRACE_COLUMNS[1:]]
            w.writerow(vals + list(extra.values()))


def train(cfg: TrainConfig, params: MdxParams | None = None, adam: AdamState | None = None,
          checkpoint_path=None, progress_every=0, start_iteration=0):
    """Train MDX and return the final parameters, optimizer state and loss trace.

    Each iteration draws a batch plan, simulates ``batch_size`` slots with
    per-slot streams ``(seed, iteration * batch_size + t)``, runs the model in
    train mode, backpropagates the weighted loss and takes one Adam step.

    Raises:
        TrainingDivergedError: if the loss becomes non-finite or an equalizer
            solve breaks down.
    """
    params = params or init_params(cfg.model, cfg.seed)
    adam = adam or AdamState(lr=cfg.lr)
    trace = []
    meta = {"seed": cfg.seed, "config_hash": cfg.config_hash()}
    for it in range(start_iteration, start_iteration + cfg.iterations):
        n_layers, bits, snr_db = batch_plan(cfg, it)
        first = it * cfg.batch_size
        batch = simulate_batch(cfg.prbs, n_layers, bits, cfg.n_rx, snr_db, cfg.channel,
                               cfg.seed, first, tuple(cfg.dmrs_symbols))
        if cfg.noise_estimate == "genie":
            nv = batch.noise_var
        else:
            nv = estimate_noise_variance(batch.Y, batch.pilots, batch.layout)
        params.zero_grad()
        seeds = [[cfg.seed, first + t] for t in range(cfg.batch_size)]
        try:
            loss, bce_d, bce_dals, mse = training_step(params, batch, nv, cfg.lam)
        except (SingularError, NumericalError) as exc:
            log.error("numerical failure at iteration %d; slot seeds %s", it, seeds)
            raise TrainingDivergedError(f"{exc} at iteration {it}", it, seeds) from exc
        if not np.isfinite(loss.value):
            log.error("non-finite loss at iteration %d; slot seeds %s", it, seeds)
            raise TrainingDivergedError(f"non-finite loss at iteration {it}", it, seeds)
        backward(loss)
        adam_step(params.tensors, params.grads(), adam)
        trace.append({
            "iteration": it,
            "loss": float(loss.value),
            "bce_d": float(bce_d.value.mean()),
            "bce_dals": float(bce_dals.value.mean()),
            "mse": float(mse.value.mean()),
            "mean_snr_db": float(np.mean(snr_db)),
        })
        if progress_every and (it + 1) % progress_every == 0:
            recent = np.mean([r["loss"] for r in trace[-progress_every:]])
            log.info("iteration %d  mean loss %.4f", it + 1, recent)
        if checkpoint_path and cfg.checkpoint_every and (it + 1) % cfg.checkpoint_every == 0:
            save_checkpoint(checkpoint_path, params, adam, {**meta, "iteration": it + 1})
    return TrainResult(params, adam, trace)
