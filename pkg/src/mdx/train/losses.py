"""Per-slot BCE and channel-MSE losses and their SNR-weighted combination."""

from __future__ import annotations

import numpy as np

from mdx.autodiff import tensor as T
from mdx.autodiff.complex import ComplexPair
from mdx.autodiff.nn import bce_with_logits
from mdx.errors import ShapeError


def bce_loss(llr, bits):
    """Binary cross-entropy in bits for each slot.

    The sum over data REs, layers and bits is divided by
    ``|D| * N_TX * prod_n B_n``; with one layer this is the mean per-bit
    cross-entropy.

    Args:
        llr: Tensor ``(T, |D|, N_TX, B)``; ``sigmoid(llr)`` is ``P(bit = 1)``.
        bits: Ground truth of the same shape.

    Returns:
        Tensor ``(T,)``.
    """
    llr = T.as_tensor(llr)
    bits = np.asarray(bits)
    if llr.shape != bits.shape or llr.ndim != 4:
        raise ShapeError(f"LLR {llr.shape} and bits {bits.shape} are not aligned")
    _, D, ntx, B = llr.shape
    norm = D * ntx * float(B) ** ntx
    return T.reduce_sum(bce_with_logits(llr, bits), axis=(1, 2, 3)) * (1.0 / norm)


def mse_loss(H_hat, H_true):
    """Mean squared Frobenius error per RE and link, for each slot.

    Args:
        H_hat: ComplexPair ``(T, |D|, N_R, N_TX)`` on the data set.
        H_true: Complex array of the same shape.

    Returns:
        Tensor ``(T,)``.
    """
    H_hat = H_hat if isinstance(H_hat, ComplexPair) else ComplexPair.from_numpy(H_hat)
    H_true = np.asarray(H_true)
    if H_hat.shape != H_true.shape or H_true.ndim != 4:
        raise ShapeError(f"estimate {H_hat.shape} vs truth {H_true.shape}")
    err = H_hat - H_true
    _, D, nr, ntx = H_true.shape
    return T.reduce_sum(err.abs2(), axis=(1, 2, 3)) * (1.0 / (D * nr * ntx))


def snr_weight(snr_db):
    """``log2(1 + snr)`` with ``snr`` linear."""
    return np.log2(1.0 + 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0))


def total_loss(bce_d, bce_dals, mse, snr_db, lam):
    """Batch loss ``mean_t w_t (bce_d + bce_dals + lam * mse)`` with ``w_t = log2(1 + snr_t)``."""
    w = snr_weight(snr_db)
    per_tti = bce_d + bce_dals
    if lam:
        per_tti = per_tti + mse * lam
    return T.reduce_mean(per_tti * w)
