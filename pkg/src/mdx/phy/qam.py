"""Gray-labelled square QAM constellations.

Labels follow the quadrant-recursive mapping used by 3GPP TS 38.211
(bits ``b0 b1 ...`` with ``b0`` the most significant):

* QPSK:   ``((1-2b0) + j(1-2b1)) / sqrt(2)``
* 16-QAM: ``((1-2b0)(2-(1-2b2)) + j(1-2b1)(2-(1-2b3))) / sqrt(10)``
* 64-QAM: ``((1-2b0)(4-(1-2b2)(2-(1-2b4))) + j(...odd bits...)) / sqrt(42)``
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from mdx.errors import ConfigError, ShapeError

SUPPORTED_ORDERS = (2, 4, 6)
MODULATION_NAMES = {2: "QPSK", 4: "16QAM", 6: "64QAM"}


@dataclass(frozen=True)
class Constellation:
    """A unit-energy ``2**B``-point constellation with its bit labelling.

    Attributes:
        bits_per_symbol: ``B``.
        points: Complex points indexed by integer label.
        labels: ``(2**B, B)`` bit matrix, row ``i`` is the label of ``points[i]``.
        zero_sets: ``(B, 2**(B-1))`` point indices whose bit ``b`` is 0.
        one_sets: ``(B, 2**(B-1))`` point indices whose bit ``b`` is 1.
    """

    bits_per_symbol: int
    points: np.ndarray
    labels: np.ndarray
    zero_sets: np.ndarray
    one_sets: np.ndarray

    @property
    def size(self):
        return len(self.points)

    @property
    def name(self):
        return MODULATION_NAMES[self.bits_per_symbol]


def _axis_amplitude(bits):
    """Amplitude for one axis: bits ``[s, m1, m2, ...]`` (sign first)."""
    n = bits.shape[-1]
    level = np.ones(bits.shape[:-1])
    for i in range(n - 1, 0, -1):
        level = 2.0 ** (n - i) - (1 - 2 * bits[..., i]) * level
    return (1 - 2 * bits[..., 0]) * level


@lru_cache(maxsize=None)
def qam(bits_per_symbol: int) -> Constellation:
    """Return the Gray-labelled QAM constellation with ``bits_per_symbol`` bits."""
    B = int(bits_per_symbol)
    if B not in SUPPORTED_ORDERS:
        raise ConfigError(f"unsupported modulation order {B}; expected one of {SUPPORTED_ORDERS}")
    labels = ((np.arange(2**B)[:, None] >> np.arange(B - 1, -1, -1)) & 1).astype(np.int8)
    re = _axis_amplitude(labels[:, 0::2].astype(float))
    im = _axis_amplitude(labels[:, 1::2].astype(float))
    points = re + 1j * im
    points = points / np.sqrt(np.mean(np.abs(points) ** 2))
    zero = np.array([np.flatnonzero(labels[:, b] == 0) for b in range(B)])
    one = np.array([np.flatnonzero(labels[:, b] == 1) for b in range(B)])
    for arr in (points, labels, zero, one):
        arr.setflags(write=False)
    return Constellation(B, points, labels, zero, one)


def qam_modulate(bits, constellation: Constellation):
    """Map a flat bit vector (or ``(..., n*B)`` array) to constellation points."""
    bits = np.asarray(bits)
    B = constellation.bits_per_symbol
    if bits.shape[-1] % B:
        raise ShapeError(f"{bits.shape[-1]} bits is not a multiple of {B}")
    groups = bits.reshape(bits.shape[:-1] + (-1, B)).astype(np.int64)
    index = groups @ (1 << np.arange(B - 1, -1, -1))
    return constellation.points[index]


def hard_demap(symbols, constellation: Constellation):
    """Nearest-point decisions, returned as bits of shape ``symbols.shape + (B,)``."""
    symbols = np.asarray(symbols)
    d = np.abs(symbols[..., None] - constellation.points) ** 2
    return constellation.labels[np.argmin(d, axis=-1)]
