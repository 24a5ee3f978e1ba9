"""LMMSE equalization and max-log demapping on the autodiff graph."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mdx.autodiff import tensor as T
from mdx.autodiff.complex import ComplexPair
from mdx.autodiff.linalg import hermitian_solve
from mdx.autodiff.tensor import Tensor, as_tensor
from mdx.errors import ShapeError
from mdx.phy.grid import SUBCARRIERS_PER_PRB, GridLayout
from mdx.phy.qam import Constellation

SIGMA_DEM_FLOOR = 1e-12
LLR_CLIP = 20.0


@dataclass
class EqualizerOutput:
    """Equalized symbols ``(..., N_TX)`` and their residual noise variances."""

    x_hat: ComplexPair
    sigma_res: Tensor


def _pair(x):
    return x if isinstance(x, ComplexPair) else ComplexPair.from_numpy(x)


def prb_index(layout: GridLayout, res=None):
    """Flat index ``(f mod 12) * S + s`` into a per-PRB ``12 x S`` matrix.

    Args:
        layout: Grid layout.
        res: ``(n, 2)`` array of ``(f, s)``; defaults to the data set.
    """
    res = layout.data_res if res is None else np.asarray(res)
    return (res[:, 0] % SUBCARRIERS_PER_PRB) * layout.S + res[:, 1]


def prb_lookup(matrix, index):
    """Gather a ``12 x S`` tensor at flat per-PRB indices (differentiable)."""
    m = as_tensor(matrix)
    return T.take(T.reshape(m, (-1,)), index, axis=0)


def lmmse_equalize(H_hat, y, noise_var, psi=None):
    """Per-RE LMMSE equalization with an adjustable input noise variance.

    With ``s2 = psi * noise_var``, ``A = H^H H + s2 I`` and ``G = A^{-1} H^H``
    the outputs are ``x = (G y) / d`` and ``sigma_res = 1 / d - 1`` where
    ``d = Re diag(G H)``. One Hermitian solve serves both ``G y`` and ``G H``.

    Args:
        H_hat: Channel estimate ``(..., N_R, N_TX)`` (ComplexPair or ndarray).
        y: Received vectors ``(..., N_R)``.
        noise_var: Noise variance broadcastable to the batch shape ``(...)``.
        psi: Optional per-RE multiplier broadcastable to the batch shape;
            ``None`` means all ones.

    Returns:
        :class:`EqualizerOutput` with ``x_hat`` and ``sigma_res`` of shape ``(..., N_TX)``.
    """
    H, y = _pair(H_hat), _pair(y)
    if H.shape[:-1] != y.shape:
        raise ShapeError(f"channel {H.shape} does not match received {y.shape}")
    batch, ntx = H.shape[:-2], H.shape[-1]
    s2 = as_tensor(noise_var)
    if psi is not None:
        s2 = T.mul(psi, s2)
    s2 = T.mul(s2, np.ones(batch))
    Hh = H.herm()
    gram = Hh @ H
    eye = np.eye(ntx)
    A = ComplexPair(gram.re + T.reshape(s2, batch + (1, 1)) * eye, gram.im)
    rhs = Hh @ concat_columns(y.expand_dims(-1), H)
    X = hermitian_solve(A, rhs)
    z = X[..., :, 0]
    i = np.arange(ntx)
    d = X.re[..., :, 1:][..., i, i]
    x_hat = z.scale_div(d)
    sigma_res = T.reciprocal(d) - 1.0
    return EqualizerOutput(x_hat, sigma_res)


def concat_columns(a: ComplexPair, b: ComplexPair):
    return ComplexPair(T.concat([a.re, b.re], -1), T.concat([a.im, b.im], -1))


def max_log_demap(x_hat, sigma_res, constellation: Constellation, gamma=1.0, phi=None,
                  clip=LLR_CLIP):
    """Max-log LLRs ``(min_{C0} |x - c|^2 - min_{C1} |x - c|^2) / sigma_dem``.

    ``sigma_dem = gamma * phi * sigma_res`` is floored at ``1e-12``. A positive
    LLR favours bit 1.

    Args:
        x_hat: Equalized symbols ``(..., N_TX)``.
        sigma_res: Residual variances of the same shape.
        constellation: Constellation used by every layer.
        gamma: Scalar tensor or float.
        phi: Optional per-RE multiplier broadcastable to ``x_hat``.
        clip: Symmetric LLR clip level, ``None`` to disable.

    Returns:
        Tensor ``(..., N_TX, B)``.
    """
    x = _pair(x_hat)
    sigma = as_tensor(sigma_res)
    if sigma.shape != x.shape:
        raise ShapeError(f"sigma {sigma.shape} vs symbols {x.shape}")
    sd = T.mul(sigma, gamma)
    if phi is not None:
        sd = T.mul(sd, phi)
    sd = T.clip(sd, lo=SIGMA_DEM_FLOOR)
    pts = constellation.points
    dr = T.sub(T.expand_dims(x.re, -1), pts.real)
    di = T.sub(T.expand_dims(x.im, -1), pts.imag)
    dist = dr * dr + di * di
    llrs = []
    for b in range(constellation.bits_per_symbol):
        m0 = T.amin(T.take(dist, constellation.zero_sets[b], axis=-1), axis=-1)
        m1 = T.amin(T.take(dist, constellation.one_sets[b], axis=-1), axis=-1)
        llrs.append(T.div(m0 - m1, sd))
    llr = T.stack(llrs, axis=-1)
    if clip is not None:
        llr = T.clip(llr, -clip, clip)
    return llr
