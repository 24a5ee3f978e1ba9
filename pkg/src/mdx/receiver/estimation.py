"""Pilot-aided least-squares estimation, time interpolation and noise estimation.

Arrays carry a leading slot axis ``T``: received grids are ``(T, F, S, N_R)``
and channel estimates ``(T, F, S, N_R, N_TX)``.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from mdx.errors import ConfigError, NumericalError, ShapeError
from mdx.phy.grid import OCC_CODES, GridLayout

PAIR_SPAN = 4  # subcarriers covered by one CDM pair estimate


class EstimateSource(str, Enum):
    PA_LS = "PA_LS"
    DA_LS = "DA_LS"
    NN = "NN"
    PERFECT = "PERFECT"


def _check_rx(Y, layout):
    Y = np.asarray(Y)
    if Y.ndim != 4 or Y.shape[1:3] != (layout.F, layout.S):
        raise ShapeError(f"received grid must be (T, {layout.F}, {layout.S}, N_R), got {Y.shape}")
    return Y


def _despread(Y, pilot, layout, layer):
    """Per-RE ``y p* / |p|^2`` on the layer's comb, grouped ``(T, K, 2, n_dmrs, N_R)``."""
    pilot = np.asarray(pilot).reshape(-1, len(layout.dmrs_symbols))
    mag2 = np.abs(pilot) ** 2
    if np.any(mag2 == 0):
        raise NumericalError(f"layer {layer} has zero-magnitude pilots")
    group, _ = layout.cdm_assignment(layer)
    comb = layout.comb_subcarriers(group)
    y = Y[:, comb][:, :, list(layout.dmrs_symbols)]
    z = y * (pilot.conj() / mag2)[None, :, :, None]
    T, _, nd, nr = z.shape
    return z.reshape(T, -1, 2, nd, nr)


def pa_ls_estimate(Y, pilots, layout: GridLayout):
    """Pilot-aided LS channel estimates on the DMRS symbols.

    The cover code is removed by averaging ``y p* / |p|^2`` over each comb
    pair, which separates the two layers of a CDM group when the channel is
    flat across the pair. The pair value is assigned to the four subcarriers
    spanned by the pair.

    Args:
        Y: Received grid ``(T, F, S, N_R)``.
        pilots: Per-layer pilot arrays in ``layout.pilot_res`` order.
        layout: Grid layout.

    Returns:
        Complex array ``(T, F, n_dmrs, N_R, N_TX)``.
    """
    Y = _check_rx(Y, layout)
    est = []
    for n in range(layout.n_layers):
        h_pair = _despread(Y, pilots[n], layout, n).mean(axis=2)
        est.append(np.repeat(h_pair, PAIR_SPAN, axis=1))
    return np.stack(est, axis=-1)


def time_interpolation_weights(layout: GridLayout):
    """``(S, n_dmrs)`` weights: linear between DMRS symbols, nearest outside."""
    pos = np.asarray(layout.dmrs_symbols, dtype=float)
    if pos.size == 0:
        raise ConfigError("no DMRS symbols to interpolate from")
    W = np.zeros((layout.S, pos.size))
    for s in range(layout.S):
        if s <= pos[0]:
            W[s, 0] = 1.0
        elif s >= pos[-1]:
            W[s, -1] = 1.0
        else:
            j = int(np.searchsorted(pos, s, side="right")) - 1
            t = (s - pos[j]) / (pos[j + 1] - pos[j])
            W[s, j], W[s, j + 1] = 1.0 - t, t
    return W


def interpolate_to_grid(est_at_pilots, layout: GridLayout):
    """Expand DMRS-symbol estimates ``(T, F, n_dmrs, ...)`` to ``(T, F, S, ...)``."""
    est = np.asarray(est_at_pilots)
    W = time_interpolation_weights(layout)
    if est.shape[2] != W.shape[1]:
        raise ShapeError(f"{est.shape[2]} DMRS columns, layout has {W.shape[1]}")
    return np.einsum("sd,tfd...->tfs...", W, est)


def estimate_noise_variance(Y, pilots, layout: GridLayout, genie_n0=None):
    """Per-slot noise variance from the DMRS symbols.

    Unused cover codes and unused CDM groups contain only noise: after
    despreading, the projection ``r = c'.z / 2`` on an unused code has variance
    ``N0 / 2`` and an empty comb RE has variance ``N0``. When all four layers
    are active no such resources exist and adjacent pair estimates are
    differenced instead, ``E|h_k - h_{k+1}|^2 = N0`` for a frequency-flat channel.

    Args:
        Y: Received grid ``(T, F, S, N_R)``.
        pilots: Per-layer pilots.
        layout: Grid layout.
        genie_n0: When given, returned unchanged (broadcast per slot).

    Returns:
        ``(T,)`` array of variance estimates.
    """
    Y = _check_rx(Y, layout)
    T = Y.shape[0]
    if genie_n0 is not None:
        return np.broadcast_to(np.asarray(genie_n0, dtype=float), (T,)).copy()
    total, count = np.zeros(T), 0
    used = {layout.cdm_assignment(n) for n in range(layout.n_layers)}
    dmrs = list(layout.dmrs_symbols)
    for group in range(2):
        codes = [c for c in range(2) if (group, c) in used]
        if not codes:
            y = Y[:, layout.comb_subcarriers(group)][:, :, dmrs]
            total += np.sum(np.abs(y) ** 2, axis=(1, 2, 3))
            count += y[0].size
            continue
        if len(codes) == 2:
            continue
        layer = 2 * group + codes[0]
        z = _despread(Y, pilots[layer], layout, layer)
        # project on the unused code; the used code's channel cancels
        r = np.einsum("tkpdr,p->tkdr", z, OCC_CODES[1 - codes[0]]) / 2
        total += 2 * np.sum(np.abs(r) ** 2, axis=(1, 2, 3))
        count += r[0].size
    if count:
        return total / count
    diffs = []
    for n in range(layout.n_layers):
        h = _despread(Y, pilots[n], layout, n).mean(axis=2)
        if h.shape[1] < 2:
            raise ConfigError("need at least two CDM pairs per layer to estimate noise")
        diffs.append(np.abs(np.diff(h, axis=1)) ** 2)
    return np.mean(np.stack(diffs), axis=(0, 2, 3, 4))
