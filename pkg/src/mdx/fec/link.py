"""Coded transport-block link simulation over the slot simulator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mdx.errors import ConfigError
from mdx.fec.crc import CRC_LEN, crc_attach, crc_check
from mdx.fec.ldpc import LdpcCode, ldpc_decode, ldpc_encode
from mdx.receiver import BaselineKind, estimate_noise_variance, run_baseline
from mdx.sim import ChannelConfig, simulate_batch


def tb_payload_size(code: LdpcCode, n_codewords):
    return n_codewords * (code.k - CRC_LEN)


def tb_encode(payload, code: LdpcCode):
    """Split ``payload`` into CRC-protected segments of ``k - 16`` bits and encode each.

    Returns:
        ``(n_codewords, n)`` codeword bits.
    """
    payload = np.asarray(payload, dtype=np.int8).ravel()
    seg = code.k - CRC_LEN
    if seg <= 0 or payload.size == 0 or payload.size % seg:
        raise ConfigError(f"payload of {payload.size} bits is not a multiple of {seg}")
    blocks = np.stack([crc_attach(p) for p in payload.reshape(-1, seg)])
    return ldpc_encode(blocks, code)


def tb_decode(llr, code: LdpcCode, max_iters=50):
    """Decode ``(n_codewords, n)`` LLRs.

    Returns:
        ``(payload, ok)`` where ``ok`` is true when every segment passes its CRC.
    """
    res = ldpc_decode(np.atleast_2d(llr), code, max_iters=max_iters)
    info = res.bits[:, code.info_cols]
    ok = all(crc_check(b) for b in info)
    return info[:, :-CRC_LEN].ravel(), ok


@dataclass
class BlerResult:
    snr_db: float
    block_errors: int
    n_blocks: int
    uncoded_bit_errors: int
    n_coded_bits: int

    @property
    def bler(self):
        return self.block_errors / self.n_blocks

    @property
    def uncoded_ber(self):
        return self.uncoded_bit_errors / self.n_coded_bits


def simulate_tb_bler(code: LdpcCode, snr_db, n_blocks, prbs=2, bits_per_symbol=4, n_rx=1,
                     channel: ChannelConfig | None = None, receiver="perfect_csi_lmmse",
                     seed=0, batch_size=100, max_iters=50):
    """Transport-block error rate of one single-layer transport block per slot.

    The slot carries as many whole codewords as fit in its data bits; the
    remaining bits are random filler. A block is in error when any segment
    fails its CRC or the decoded payload differs from the transmitted one.
    """
    channel = channel or ChannelConfig(kind="block")
    kind = BaselineKind(receiver.upper())
    rng = np.random.default_rng([seed, 7])
    res = BlerResult(float(snr_db), 0, 0, 0, 0)
    for start in range(0, n_blocks, batch_size):
        T = min(batch_size, n_blocks - start)
        probe = simulate_batch(prbs, 1, bits_per_symbol, n_rx, [snr_db], channel, seed, 0)
        n_data_bits = probe.bits.size
        n_cw = n_data_bits // code.n
        if n_cw == 0:
            raise ConfigError(f"{n_data_bits} data bits cannot carry a length-{code.n} codeword")
        payloads = rng.integers(0, 2, size=(T, tb_payload_size(code, n_cw)), dtype=np.int8)
        stream = np.empty((T, n_data_bits), dtype=np.int8)
        for t in range(T):
            stream[t, : n_cw * code.n] = tb_encode(payloads[t], code).ravel()
        stream[:, n_cw * code.n:] = rng.integers(0, 2, size=(T, n_data_bits - n_cw * code.n))
        bits = stream.reshape((T,) + probe.bits.shape[1:])
        b = simulate_batch(prbs, 1, bits_per_symbol, n_rx, np.full(T, float(snr_db)), channel,
                           seed, start, bits=bits)
        nv = b.noise_var
        if kind is BaselineKind.LS_LMMSE:
            nv = estimate_noise_variance(b.Y, b.pilots, b.layout)
        g = run_baseline(kind, b.Y, b.layout, b.pilots, nv, b.constellation, H_true=b.H)
        llr = g.llr.reshape(T, -1)
        res.uncoded_bit_errors += int(np.sum((llr > 0) != stream))
        res.n_coded_bits += stream.size
        for t in range(T):
            dec, ok = tb_decode(llr[t, : n_cw * code.n].reshape(n_cw, code.n), code, max_iters)
            res.block_errors += int(not ok or not np.array_equal(dec, payloads[t]))
        res.n_blocks += T
    return res
