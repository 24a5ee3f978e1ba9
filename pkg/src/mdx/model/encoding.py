"""Per-PRB positional encoding."""

from __future__ import annotations

import numpy as np

from mdx.phy.grid import SUBCARRIERS_PER_PRB, GridLayout


def positional_encoding(layout: GridLayout, layer, freq_norm=12.0, time_norm=14.0):
    """``(12, 14, 4)`` encoding of one layer.

    Channels 0-1 hold the frequency and time distance to the nearest pilot
    subcarrier and DMRS symbol of ``layer`` inside a PRB, divided by
    ``freq_norm`` and ``time_norm``. Channels 2-3 hold the absolute 1-based
    coordinates ``f_p / 12`` and ``s_p / 14``.
    """
    group, _ = layout.cdm_assignment(layer)
    F, S = SUBCARRIERS_PER_PRB, layout.S
    f = np.arange(F)
    s = np.arange(S)
    pilot_f = f[f % 2 == group]
    pilot_s = np.asarray(layout.dmrs_symbols)
    df = np.min(np.abs(f[:, None] - pilot_f[None, :]), axis=1) / freq_norm
    ds = np.min(np.abs(s[:, None] - pilot_s[None, :]), axis=1) / time_norm
    pe = np.empty((F, S, 4))
    pe[..., 0] = df[:, None]
    pe[..., 1] = ds[None, :]
    pe[..., 2] = (f[:, None] + 1) / F
    pe[..., 3] = (s[None, :] + 1) / S
    return pe


def tiled_encoding(layout: GridLayout, freq_norm=12.0, time_norm=14.0):
    """``(N_TX, F, S, 4)`` encodings repeated over all PRBs."""
    pes = [positional_encoding(layout, n, freq_norm, time_norm) for n in range(layout.n_layers)]
    return np.tile(np.stack(pes), (1, layout.num_prbs, 1, 1))
