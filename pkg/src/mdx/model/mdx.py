"""MDX receiver forward pass.

Pipeline per batch of slots: PA-LS estimation and time interpolation, a first
LMMSE pass scaled by ``psi_dals``, data-aided LS re-estimation, residual
convolutional refinement per MIMO link, a second LMMSE pass scaled by
``psi_d`` and max-log demapping scaled by ``gamma`` and ``phi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mdx.autodiff import tensor as T
from mdx.autodiff.complex import ComplexPair
from mdx.autodiff.complex import concat as complex_concat
from mdx.autodiff.nn import MultCounter, batch_norm, conv2d_separable
from mdx.errors import ConfigError, ShapeError
from mdx.model.encoding import tiled_encoding
from mdx.model.params import MdxParams
from mdx.phy.grid import SUBCARRIERS_PER_PRB, GridLayout
from mdx.phy.qam import Constellation
from mdx.receiver.baseline import gather_data
from mdx.receiver.equalizer import lmmse_equalize, max_log_demap, prb_index, prb_lookup
from mdx.receiver.estimation import interpolate_to_grid, pa_ls_estimate


@dataclass
class MdxOutput:
    llr_final: T.Tensor
    llr_intermediate: T.Tensor | None
    H_nn: ComplexPair
    H_pals: np.ndarray
    x_dals: ComplexPair
    sigma_dals: T.Tensor


def _grid_prb_index(layout: GridLayout):
    f = np.arange(layout.F) % SUBCARRIERS_PER_PRB
    return f[:, None] * layout.S + np.arange(layout.S)[None, :]


def dals_equalize(H_pals_data, y_data, noise_var, params: MdxParams, layout: GridLayout):
    """First LMMSE pass on data REs with the ``psi_dals`` adjustment."""
    psi = prb_lookup(params["psi_dals"], prb_index(layout))
    return lmmse_equalize(H_pals_data, y_data, _col(noise_var), psi=psi)


def _col(noise_var):
    return np.asarray(noise_var, dtype=float).reshape(-1, 1)


def _pair(x):
    return x if isinstance(x, ComplexPair) else ComplexPair.from_numpy(x)


def da_ls_estimate(H_pals, x_dals, y):
    """Data-aided LS channel ``(y - H_{\\n} x_{\\n}) conj(x_n)`` for every layer ``n``.

    Args:
        H_pals: ``(..., N_R, N_TX)``.
        x_dals: ``(..., N_TX)`` equalized symbols.
        y: ``(..., N_R)`` received vectors.

    Returns:
        ComplexPair ``(..., N_R, N_TX)``.
    """
    H, x, y = _pair(H_pals), _pair(x_dals), _pair(y)
    xb = x.expand_dims(-2)  # (..., 1, N_TX)
    own = H * xb  # column n scaled by x_n
    resid = y - own.sum(axis=-1)  # y - H x
    return (own + resid.expand_dims(-1)) * xb.conj()


def _assemble_full(data_part: ComplexPair, fill: np.ndarray, layout: GridLayout):
    """Merge data-RE values with constants elsewhere into ``(T, F, S, ...)``."""
    flat_fill = fill.reshape((fill.shape[0], layout.F * layout.S) + fill.shape[3:])
    other = np.setdiff1d(np.arange(layout.F * layout.S), layout.data_indices)
    pos = np.empty(layout.F * layout.S, dtype=np.int64)
    pos[layout.data_indices] = np.arange(layout.num_data)
    pos[other] = layout.num_data + np.arange(other.size)
    merged = complex_concat([data_part, ComplexPair.from_numpy(flat_fill[:, other])], axis=1)
    full = merged.take(pos, axis=1)
    return full.reshape((fill.shape[0], layout.F, layout.S) + fill.shape[3:])


def _to_links(H: ComplexPair):
    """``(T, F, S, N_R, N_TX)`` to real link tensor ``(T * N_R * N_TX, F, S, 2)``."""
    Tn, F, S, nr, ntx = H.shape
    parts = [T.transpose(p, (0, 3, 4, 1, 2)) for p in (H.re, H.im)]
    return T.reshape(T.stack(parts, axis=-1), (Tn * nr * ntx, F, S, 2))


def _from_links(A, shape):
    Tn, F, S, nr, ntx = shape
    A = T.reshape(A, (Tn, nr, ntx, F, S, 2))
    re = T.transpose(A[..., 0], (0, 3, 4, 1, 2))
    im = T.transpose(A[..., 1], (0, 3, 4, 1, 2))
    return ComplexPair(re, im)


def resblocks_forward(A1, B1, pe, params: MdxParams, layout: GridLayout, mode="train",
                      update_stats=True, counter: MultCounter | None = None):
    """Residual refinement of per-link estimates with shared weights.

    Args:
        A1: PA-LS link tensor ``(L, F, S, 2)``.
        B1: DA-LS link tensor ``(L, F, S, 2)``.
        pe: Positional encoding per link ``(L, F, S, 4)`` (constant).
        params: Model parameters.
        layout: Grid layout (for per-PRB tiling of ``Gamma``).
        mode: ``"train"`` (batch statistics) or ``"infer"`` (running statistics).
        update_stats: Fold batch statistics into the running ones in train mode.
        counter: Optional multiplication counter for the convolutions.

    Returns:
        Refined link tensor ``(L, F, S, 2)``.
    """
    A, B = T.as_tensor(A1), T.as_tensor(B1)
    if A.ndim != 4 or A.shape[-1] != 2 or B.shape != A.shape:
        raise ShapeError(f"link tensors must be (L, F, S, 2), got {A.shape} and {B.shape}")
    if A.shape[1] % SUBCARRIERS_PER_PRB or A.shape[2] != 14:
        raise ShapeError(f"grid {A.shape[1:3]} is not a whole number of PRBs by 14 symbols")
    cfg = params.config
    idx = _grid_prb_index(layout)
    for l in range(cfg.n_blocks):
        p = lambda name: params.block(l, name)  # noqa: E731
        X = T.concat([A, B], axis=-1)
        X = batch_norm(X, p("bn_gamma"), p("bn_beta"), params.bn[l], mode, update_stats)
        X = T.relu(X)
        X = T.concat([X, pe], axis=-1)
        X = conv2d_separable(X, p("trunk_dw"), p("trunk_pw"), p("trunk_dw_b"), p("trunk_pw_b"),
                             counter)
        X = T.relu(X)
        dA = conv2d_separable(X, p("a_dw"), p("a_pw"), p("a_dw_b"), p("a_pw_b"), counter)
        gamma_l = T.take(T.reshape(params["Gamma"][l], (-1,)), idx, axis=0)
        A = A + dA * T.reshape(gamma_l, idx.shape + (1,))
        if l < cfg.n_blocks - 1:
            B = B + conv2d_separable(X, p("b_dw"), p("b_pw"), p("b_dw_b"), p("b_pw_b"), counter)
    return A


def mdx_forward(Y, pilots, layout: GridLayout, noise_var, params: MdxParams,
                constellation: Constellation, mode="train", update_stats=True):
    """Run the MDX receiver on a batch of slots.

    Args:
        Y: Received grid ``(T, F, S, N_R)``.
        pilots: Per-layer pilots.
        layout: Grid layout shared by the batch.
        noise_var: ``(T,)`` noise variance estimates.
        params: Model parameters.
        constellation: Constellation shared by all layers.
        mode: ``"train"`` also returns the intermediate LLRs; ``"infer"`` does not
            and uses BN running statistics.
        update_stats: Whether train mode updates BN running statistics.

    Returns:
        :class:`MdxOutput`; LLR tensors have shape ``(T, |D|, N_TX, B)``.
    """
    if mode not in ("train", "infer"):
        raise ConfigError(f"unknown mode {mode!r}")
    Y = np.asarray(Y)
    Tn = Y.shape[0]
    noise_var = np.broadcast_to(np.asarray(noise_var, dtype=float), (Tn,))
    H_pals = interpolate_to_grid(pa_ls_estimate(Y, pilots, layout), layout)
    Hd = gather_data(H_pals, layout)
    yd = gather_data(Y, layout)

    dals = dals_equalize(Hd, yd, noise_var, params, layout)
    H_da = da_ls_estimate(Hd, dals.x_hat, yd)
    B_full = _assemble_full(H_da, H_pals, layout)

    A1 = _to_links(ComplexPair.from_numpy(H_pals))
    B1 = _to_links(B_full)
    cfg = params.config
    pe = tiled_encoding(layout, cfg.pe_freq_norm, cfg.pe_time_norm)
    nr = Y.shape[-1]
    pe_links = np.broadcast_to(pe[None, None], (Tn, nr) + pe.shape).reshape((-1,) + pe.shape[1:])
    A_out = resblocks_forward(A1, B1, pe_links, params, layout, mode, update_stats)
    H_nn = _from_links(A_out, H_pals.shape)

    flat = H_nn.reshape((Tn, layout.F * layout.S) + H_pals.shape[3:])
    Hnn_d = flat.take(layout.data_indices, axis=1)
    psi_d = prb_lookup(params["psi_d"], prb_index(layout))
    det = lmmse_equalize(Hnn_d, yd, _col(noise_var), psi=psi_d)
    phi = T.reshape(prb_lookup(params["phi"], prb_index(layout)), (-1, 1))
    gamma = params["gamma"][params.gamma_index(constellation.bits_per_symbol)]
    llr = max_log_demap(det.x_hat, det.sigma_res, constellation, gamma=gamma, phi=phi)
    inter = None
    if mode == "train":
        inter = max_log_demap(dals.x_hat, dals.sigma_res, constellation)
    return MdxOutput(llr, inter, H_nn, H_pals, dals.x_hat, dals.sigma_res)
