"""CRC-16 (polynomial 0x1021, zero initial value, no reflection, no final XOR)."""

from __future__ import annotations

import numpy as np

CRC16_CCITT = 0x1021
CRC_LEN = 16


def crc_remainder(bits, poly=CRC16_CCITT):
    """Remainder of ``bits * x^16`` modulo the generator, as 16 bits (MSB first)."""
    reg = 0
    for b in np.asarray(bits, dtype=np.int64).ravel():
        top = ((reg >> 15) & 1) ^ int(b)
        reg = (reg << 1) & 0xFFFF
        if top:
            reg ^= poly
    return np.array([(reg >> (15 - i)) & 1 for i in range(CRC_LEN)], dtype=np.int8)


def crc_attach(bits, poly=CRC16_CCITT):
    bits = np.asarray(bits, dtype=np.int8).ravel()
    return np.concatenate([bits, crc_remainder(bits, poly)])


def crc_check(bits, poly=CRC16_CCITT):
    """True when the trailing 16 bits equal the CRC of the preceding payload."""
    bits = np.asarray(bits, dtype=np.int8).ravel()
    if bits.size < CRC_LEN:
        return False
    return bool(np.array_equal(crc_remainder(bits[:-CRC_LEN], poly), bits[-CRC_LEN:]))
