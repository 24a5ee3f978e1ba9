"""Slot-level transmit/channel/receive simulation shared by training and evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mdx.channel import (
    apply_channel,
    generate_tdl_channel,
    load_profile,
    rayleigh_block_fading,
    snr_to_noise_var,
)
from mdx.channel.tdl import doppler_from_speed
from mdx.errors import ConfigError
from mdx.phy import build_grid_layout, generate_dmrs, map_to_grid, qam, qam_modulate

PILOT_SEED = 0


@dataclass(frozen=True)
class ChannelConfig:
    """Channel model: ``"block"`` Rayleigh or ``"tdl"`` with randomized profile scaling."""

    kind: str = "block"
    profile: str = "tdl_a"
    speed_range: tuple | None = (0.0, 56.0)
    doppler_range: tuple = (0.0, 325.0)
    delay_spread_range: tuple = (10e-9, 300e-9)
    carrier_hz: float = 2.14e9
    subcarrier_spacing_hz: float = 30e3

    def __post_init__(self):
        if self.kind not in ("block", "tdl"):
            raise ConfigError(f"unknown channel kind {self.kind!r}")


@dataclass
class SlotBatch:
    """A batch of simulated slots sharing one layout and constellation."""

    Y: np.ndarray
    H: np.ndarray
    bits: np.ndarray
    noise_var: np.ndarray
    snr_db: np.ndarray
    layout: object
    constellation: object
    pilots: list = field(default_factory=list)


def tti_rng(master_seed, index):
    """Independent per-TTI stream derived from ``(master_seed, index)``."""
    return np.random.default_rng([int(master_seed), int(index)])


def draw_channel(cfg: ChannelConfig, layout, n_rx, rng, profile=None):
    F, S, ntx = layout.F, layout.S, layout.n_layers
    if cfg.kind == "block":
        return rayleigh_block_fading(F, S, n_rx, ntx, rng)
    profile = profile or load_profile(cfg.profile)
    if cfg.speed_range is not None:
        dopplers = doppler_from_speed(rng.uniform(*cfg.speed_range, size=ntx), cfg.carrier_hz)
    else:
        dopplers = rng.uniform(*cfg.doppler_range, size=ntx)
    ds = rng.uniform(*cfg.delay_spread_range)
    seed = int(rng.integers(2**63))
    return generate_tdl_channel(profile, ds, dopplers, F, S, n_rx, ntx, seed=seed,
                                subcarrier_spacing_hz=cfg.subcarrier_spacing_hz)


def simulate_batch(num_prbs, n_layers, bits_per_symbol, n_rx, snr_db, channel: ChannelConfig,
                   master_seed, first_index=0, dmrs_symbols=(2, 11), bits=None):
    """Simulate ``len(snr_db)`` slots; slot ``t`` uses stream ``(master_seed, first_index + t)``.

    ``bits`` optionally replaces the random payload with ``(T, |D|, N_TX, B)``
    caller bits; the random streams are consumed identically either way.

    Returns:
        :class:`SlotBatch` with ``Y (T, F, S, N_R)``, ``H (T, F, S, N_R, N_TX)``
        and ``bits (T, |D|, N_TX, B)``.
    """
    layout = build_grid_layout(num_prbs, n_layers, dmrs_symbols)
    const = qam(bits_per_symbol)
    pilots = [generate_dmrs(n, layout, PILOT_SEED) for n in range(n_layers)]
    snr_db = np.atleast_1d(np.asarray(snr_db, dtype=float))
    profile = load_profile(channel.profile) if channel.kind == "tdl" else None
    given = None
    if bits is not None:
        given = np.asarray(bits, dtype=np.int8)
        want = (len(snr_db), layout.num_data, n_layers, bits_per_symbol)
        if given.shape != want:
            raise ConfigError(f"bits shape {given.shape} != {want}")
    Ys, Hs, bits_all = [], [], []
    for t, snr in enumerate(snr_db):
        rng = tti_rng(master_seed, first_index + t)
        bits = rng.integers(0, 2, size=(layout.num_data, n_layers, bits_per_symbol), dtype=np.int8)
        if given is not None:
            bits = given[t]
        syms = qam_modulate(bits.transpose(1, 0, 2).reshape(n_layers, -1), const)
        grid = map_to_grid(syms, pilots, layout, bits)
        H = draw_channel(channel, layout, n_rx, rng, profile)
        Ys.append(apply_channel(grid.values, H, snr_to_noise_var(snr), rng))
        Hs.append(H)
        bits_all.append(bits)
    return SlotBatch(np.stack(Ys), np.stack(Hs), np.stack(bits_all), snr_to_noise_var(snr_db),
                     snr_db, layout, const, pilots)
