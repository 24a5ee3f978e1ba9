"""Fading channel generation, AWGN and randomized drops."""

from mdx.channel.drops import Drop, DropConfig, layer_count_pmf, sample_drop
from mdx.channel.tdl import (
    TdlProfile,
    apply_channel,
    doppler_from_speed,
    generate_tdl_channel,
    load_profile,
    rayleigh_block_fading,
)


def snr_to_noise_var(snr_db):
    """``N0 = 1 / snr`` for unit-energy symbols and unit-power links."""
    return 10.0 ** (-snr_db / 10.0)


__all__ = [
    "Drop", "DropConfig", "TdlProfile", "apply_channel", "doppler_from_speed",
    "generate_tdl_channel", "layer_count_pmf", "load_profile", "rayleigh_block_fading",
    "sample_drop", "snr_to_noise_var",
]
