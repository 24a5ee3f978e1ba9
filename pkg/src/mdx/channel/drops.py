"""Randomized multi-user drops used to diversify training data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mdx.channel.tdl import doppler_from_speed
from mdx.errors import ConfigError


@dataclass(frozen=True)
class DropConfig:
    max_layers: int = 2
    n_rx: int = 4
    speed_range: tuple | None = (0.0, 56.0)
    doppler_range: tuple = (0.0, 325.0)
    delay_spread_range: tuple = (10e-9, 300e-9)
    carrier_hz: float = 2.14e9
    subcarrier_spacing_hz: float = 30e3
    snr_range_db: tuple = (-4.0, 16.0)
    randomize_layers: bool = True

    def __post_init__(self):
        ranges = [self.doppler_range, self.delay_spread_range, self.snr_range_db]
        if self.speed_range is not None:
            ranges.append(self.speed_range)
        for lo, hi in ranges:
            if lo > hi:
                raise ConfigError(f"range ({lo}, {hi}) is not ordered")
        if self.max_layers < 1 or self.n_rx < 1:
            raise ConfigError("max_layers and n_rx must be positive")


@dataclass(frozen=True)
class Drop:
    n_layers: int
    speeds: np.ndarray | None
    dopplers: np.ndarray
    delay_spread: float
    snr_db: float


def layer_count_pmf(max_layers):
    """Discrete triangular pmf on ``1..K`` with mode ``K``: ``p(k) = 2k / (K (K + 1))``."""
    k = np.arange(1, max_layers + 1)
    return 2.0 * k / (max_layers * (max_layers + 1))


def sample_layer_count(max_layers, rng):
    return int(rng.choice(np.arange(1, max_layers + 1), p=layer_count_pmf(max_layers)))


def sample_drop(cfg: DropConfig, seed_or_rng):
    """Draw active layers, per-layer speeds/Dopplers, delay spread and SNR."""
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else np.random.default_rng(seed_or_rng)
    n = sample_layer_count(cfg.max_layers, rng) if cfg.randomize_layers else cfg.max_layers
    if cfg.speed_range is not None:
        speeds = rng.uniform(*cfg.speed_range, size=n)
        dopplers = doppler_from_speed(speeds, cfg.carrier_hz)
    else:
        speeds = None
        dopplers = rng.uniform(*cfg.doppler_range, size=n)
    delay_spread = float(rng.uniform(*cfg.delay_spread_range))
    snr_db = float(rng.uniform(*cfg.snr_range_db))
    return Drop(n, speeds, dopplers, delay_spread, snr_db)
