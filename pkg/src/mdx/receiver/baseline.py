"""Classical LS+LMMSE and perfect-CSI LMMSE receivers."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from mdx.errors import ConfigError
from mdx.phy.grid import GridLayout
from mdx.phy.qam import Constellation
from mdx.receiver.equalizer import lmmse_equalize, max_log_demap
from mdx.receiver.estimation import interpolate_to_grid, pa_ls_estimate


class BaselineKind(str, Enum):
    LS_LMMSE = "LS_LMMSE"
    PERFECT_CSI_LMMSE = "PERFECT_CSI_LMMSE"


@dataclass
class LlrGrid:
    """LLRs ``(T, |D|, N_TX, B)`` over the data set plus the equalizer outputs."""

    llr: np.ndarray
    bits_per_symbol: int
    x_hat: np.ndarray | None = None
    sigma_res: np.ndarray | None = None
    H_hat: np.ndarray | None = None


def gather_data(grid, layout: GridLayout):
    """``(T, F, S, ...)`` to ``(T, |D|, ...)`` in data-set order."""
    grid = np.asarray(grid)
    flat = grid.reshape((grid.shape[0], layout.F * layout.S) + grid.shape[3:])
    return flat[:, layout.data_indices]


def run_baseline(kind, Y, layout: GridLayout, pilots, noise_var, constellation: Constellation,
                 H_true=None):
    """Run a non-learned receiver over a batch of slots.

    Args:
        kind: :class:`BaselineKind` (or its string value).
        Y: Received grid ``(T, F, S, N_R)``.
        layout: Grid layout.
        pilots: Per-layer pilots (unused for perfect CSI).
        noise_var: ``(T,)`` or scalar noise variance used by the equalizer.
        constellation: Constellation of all layers.
        H_true: True channel ``(T, F, S, N_R, N_TX)``; required for perfect CSI.

    Returns:
        :class:`LlrGrid`.
    """
    kind = BaselineKind(kind)
    Y = np.asarray(Y)
    T = Y.shape[0]
    if kind is BaselineKind.PERFECT_CSI_LMMSE:
        if H_true is None:
            raise ConfigError("perfect-CSI baseline needs the true channel")
        H = np.asarray(H_true)
    else:
        H = interpolate_to_grid(pa_ls_estimate(Y, pilots, layout), layout)
    B = constellation.bits_per_symbol
    if layout.num_data == 0:
        return LlrGrid(np.zeros((T, 0, layout.n_layers, B)), B)
    Hd = gather_data(H, layout)
    yd = gather_data(Y, layout)
    nv = np.broadcast_to(np.asarray(noise_var, dtype=float), (T,))[:, None]
    eq = lmmse_equalize(Hd, yd, nv)
    llr = max_log_demap(eq.x_hat, eq.sigma_res, constellation)
    return LlrGrid(llr.value, B, eq.x_hat.numpy(), eq.sigma_res.value, H)
