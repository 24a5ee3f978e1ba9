"""Tapped-delay-line fading with sum-of-sinusoids Doppler, plus block Rayleigh fading."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from mdx.errors import ConfigError, ShapeError

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_SINUSOIDS = 32


@dataclass(frozen=True)
class TdlProfile:
    """Normalized power-delay profile; delays scale with the RMS delay spread."""

    name: str
    tap_delays: np.ndarray
    tap_powers: np.ndarray

    @classmethod
    def from_db(cls, name, delays_normalized, powers_db):
        delays = np.asarray(delays_normalized, dtype=float)
        powers = 10.0 ** (np.asarray(powers_db, dtype=float) / 10.0)
        if delays.shape != powers.shape or delays.ndim != 1 or delays.size == 0:
            raise ConfigError("profile needs equally long, non-empty delay and power lists")
        if np.any(delays < 0):
            raise ConfigError("tap delays must be non-negative")
        order = np.argsort(delays, kind="stable")
        powers = powers[order] / powers.sum()
        return cls(name, delays[order], powers)

    @classmethod
    def single_tap(cls):
        return cls("flat", np.zeros(1), np.ones(1))


def load_profile(path_or_name="tdl_a"):
    """Load a profile JSON ``{name, delays_normalized[], powers_db[]}``.

    A bare name (e.g. ``"tdl_a"``) resolves to a bundled profile.
    """
    text = None
    if isinstance(path_or_name, str) and not path_or_name.endswith(".json"):
        res = resources.files("mdx.channel").joinpath("profiles", f"{path_or_name.lower()}.json")
        if res.is_file():
            text = res.read_text()
    if text is None:
        with open(path_or_name) as fh:
            text = fh.read()
    doc = json.loads(text)
    return TdlProfile.from_db(doc["name"], doc["delays_normalized"], doc["powers_db"])


def symbol_duration(subcarrier_spacing_hz):
    """OFDM symbol period including cyclic prefix (slot length / 14)."""
    slot = 1e-3 * 15e3 / subcarrier_spacing_hz
    return slot / 14


def doppler_from_speed(speed_mps, carrier_hz):
    return np.asarray(speed_mps, dtype=float) * carrier_hz / SPEED_OF_LIGHT


def generate_tdl_channel(profile: TdlProfile, rms_delay_spread, doppler_hz, F, S, n_rx,
                         n_tx=1, seed=0, subcarrier_spacing_hz=30e3,
                         n_sinusoids=DEFAULT_SINUSOIDS):
    """Frequency response of independent TDL links over one slot.

    Each tap of each link follows a sum of ``n_sinusoids`` unit-amplitude
    sinusoids with random arrival angles and phases, which gives a Jakes-like
    time correlation and ``E|h|^2 = 1`` per tap. ``doppler_hz`` may be a scalar
    or one value per transmit layer.

    Returns:
        Complex array ``(F, S, n_rx, n_tx)`` with ``E|H|^2 = 1`` per link.
    """
    if subcarrier_spacing_hz <= 0:
        raise ConfigError("subcarrier spacing must be positive")
    doppler = np.broadcast_to(np.asarray(doppler_hz, dtype=float), (n_tx,))
    if np.any(doppler < 0):
        raise ConfigError("Doppler frequency must be non-negative")
    rng = np.random.default_rng(seed)
    L, M = profile.tap_powers.size, n_sinusoids
    alpha = rng.uniform(0, 2 * np.pi, size=(n_rx, n_tx, L, M))
    phase = rng.uniform(0, 2 * np.pi, size=(n_rx, n_tx, L, M))
    t = np.arange(S) * symbol_duration(subcarrier_spacing_hz)
    w = 2 * np.pi * doppler[None, :, None, None] * np.cos(alpha)
    g = np.exp(1j * (w[..., None] * t + phase[..., None])).sum(axis=3) / np.sqrt(M)
    g *= np.sqrt(profile.tap_powers)[None, None, :, None]
    freqs = (np.arange(F) - F / 2) * subcarrier_spacing_hz
    tau = profile.tap_delays * rms_delay_spread
    steering = np.exp(-2j * np.pi * np.outer(freqs, tau))
    return np.einsum("fl,rtls->fsrt", steering, g)


def rayleigh_block_fading(F, S, n_rx, n_tx, rng):
    """I.i.d. ``CN(0, 1)`` link gains held constant over the whole slot."""
    h = (rng.standard_normal((n_rx, n_tx)) + 1j * rng.standard_normal((n_rx, n_tx))) / np.sqrt(2)
    return np.broadcast_to(h, (F, S, n_rx, n_tx)).copy()


def apply_channel(x, H, noise_var, rng):
    """``y = H x + n`` per resource element with ``n ~ CN(0, noise_var I)``.

    Args:
        x: Transmitted grid ``(..., F, S, n_tx)``.
        H: Channel ``(..., F, S, n_rx, n_tx)``.
        noise_var: Noise power per receive antenna ``N0``.
        rng: numpy Generator.
    """
    x, H = np.asarray(x), np.asarray(H)
    if H.shape[:-2] != x.shape[:-1] or H.shape[-1] != x.shape[-1]:
        raise ShapeError(f"channel {H.shape} does not match grid {x.shape}")
    y = np.einsum("...rt,...t->...r", H, x)
    noise = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
    return y + np.sqrt(noise_var / 2) * noise
