"""Slot resource-grid layout with type-1 (comb) DMRS and frequency-domain CDM.

Indices are 0-based: subcarrier ``f`` in ``[0, F)``, OFDM symbol ``s`` in
``[0, 14)``. A resource element is addressed by the flat index ``f * S + s``.

CDM group ``g`` uses the comb of subcarriers with ``f % 2 == g`` at every DMRS
symbol. Consecutive comb subcarriers are paired; the two layers sharing a
group apply the cover codes ``(+1, +1)`` and ``(+1, -1)`` across each pair.
Layers map to ``(group, code)`` as ``n -> (n // 2, n % 2)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from mdx.errors import ConfigError, ShapeError

SUBCARRIERS_PER_PRB = 12
SYMBOLS_PER_SLOT = 14
DEFAULT_DMRS_SYMBOLS = (2, 11)
NUM_CDM_GROUPS = 2
OCC_CODES = np.array([[1.0, 1.0], [1.0, -1.0]])


@dataclass(frozen=True)
class GridLayout:
    num_prbs: int
    n_layers: int
    dmrs_symbols: tuple = DEFAULT_DMRS_SYMBOLS
    cdm_group_size: int = 2

    @property
    def F(self):
        return SUBCARRIERS_PER_PRB * self.num_prbs

    @property
    def S(self):
        return SYMBOLS_PER_SLOT

    @property
    def num_re(self):
        return self.F * self.S

    def cdm_assignment(self, layer):
        """``(cdm_group, occ_code_index)`` of a layer."""
        self._check_layer(layer)
        return layer // 2, layer % 2

    def occ_signs(self, layer):
        return OCC_CODES[layer % 2]

    @cached_property
    def active_groups(self):
        return sorted({n // 2 for n in range(self.n_layers)})

    def comb_subcarriers(self, group):
        return np.arange(group, self.F, 2)

    def pair_subcarriers(self, group):
        """``(num_pairs, 2)`` array of the subcarrier pairs carrying group ``group``."""
        return self.comb_subcarriers(group).reshape(-1, 2)

    def pilot_res(self, layer):
        """``(|P_n|, 2)`` array of ``(f, s)`` pilot positions of ``layer``, ``f``-major."""
        group, _ = self.cdm_assignment(layer)
        f = self.comb_subcarriers(group)
        s = np.asarray(self.dmrs_symbols)
        ff, ss = np.meshgrid(f, s, indexing="ij")
        return np.stack([ff.ravel(), ss.ravel()], axis=1)

    @cached_property
    def data_mask(self):
        """Boolean ``(F, S)`` mask of the data set (all REs off DMRS symbols)."""
        mask = np.ones((self.F, self.S), dtype=bool)
        mask[:, list(self.dmrs_symbols)] = False
        mask.setflags(write=False)
        return mask

    @cached_property
    def data_indices(self):
        """Flat RE indices ``f * S + s`` of the data set, ascending."""
        idx = np.flatnonzero(self.data_mask.ravel())
        idx.setflags(write=False)
        return idx

    @property
    def data_res(self):
        idx = self.data_indices
        return np.stack([idx // self.S, idx % self.S], axis=1)

    @property
    def num_data(self):
        return int(self.data_indices.size)

    def pilot_mask(self, layer):
        mask = np.zeros((self.F, self.S), dtype=bool)
        p = self.pilot_res(layer)
        mask[p[:, 0], p[:, 1]] = True
        return mask

    def reserved_mask(self, layer):
        """DMRS-symbol REs that carry neither data nor this layer's pilots."""
        return ~self.data_mask & ~self.pilot_mask(layer)

    def _check_layer(self, layer):
        if not 0 <= layer < self.n_layers:
            raise ConfigError(f"layer {layer} outside [0, {self.n_layers})")

    def to_json(self):
        """Serialize pilot/data index lists (for fixtures and debugging)."""
        doc = {
            "num_prbs": self.num_prbs,
            "num_subcarriers": self.F,
            "num_symbols": self.S,
            "dmrs_symbols": list(self.dmrs_symbols),
            "cdm_group_size": self.cdm_group_size,
            "data": self.data_res.tolist(),
            "layers": [
                {
                    "layer": n,
                    "cdm_group": self.cdm_assignment(n)[0],
                    "occ": self.occ_signs(n).astype(int).tolist(),
                    "pilots": self.pilot_res(n).tolist(),
                }
                for n in range(self.n_layers)
            ],
        }
        return json.dumps(doc)


def build_grid_layout(num_prbs, n_layers, dmrs_symbols=DEFAULT_DMRS_SYMBOLS, cdm_group_size=2):
    """Validate arguments and build a :class:`GridLayout`."""
    if num_prbs < 1:
        raise ConfigError(f"need at least one PRB, got {num_prbs}")
    if cdm_group_size != 2:
        raise ConfigError("only CDM group size 2 is supported")
    if not 1 <= n_layers <= cdm_group_size * NUM_CDM_GROUPS:
        raise ConfigError(f"unsupported layer count {n_layers} (1..{cdm_group_size * NUM_CDM_GROUPS})")
    dmrs = tuple(sorted(int(s) for s in dmrs_symbols))
    if not dmrs or len(set(dmrs)) != len(dmrs) or not all(0 <= s < SYMBOLS_PER_SLOT for s in dmrs):
        raise ConfigError(f"invalid DMRS symbols {dmrs_symbols}")
    return GridLayout(int(num_prbs), int(n_layers), dmrs, cdm_group_size)


def generate_dmrs(layer, layout: GridLayout, seed=0):
    """Pilot values of ``layer`` in :meth:`GridLayout.pilot_res` order.

    The two layers of a CDM group share one unit-magnitude QPSK base sequence
    drawn from ``(seed, group)``; the second layer applies the ``(+1, -1)``
    cover across each subcarrier pair.
    """
    group, code = layout.cdm_assignment(layer)
    n_sc = layout.F // 2
    n_sym = len(layout.dmrs_symbols)
    rng = np.random.default_rng([int(seed), group])
    bits = rng.integers(0, 2, size=(n_sc, n_sym, 2))
    base = ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1])) / np.sqrt(2)
    cover = np.tile(OCC_CODES[code], n_sc // 2)[:, None]
    return (base * cover).ravel()


@dataclass
class ResourceGrid:
    """Transmitted symbols of all layers for one slot.

    Attributes:
        values: Complex ``(F, S, n_layers)`` array.
        layout: The grid layout.
        bits: ``(num_data, n_layers, B)`` payload bits aligned with the data set.
    """

    values: np.ndarray
    layout: GridLayout
    bits: np.ndarray | None = field(default=None)


def map_to_grid(symbols, pilots, layout: GridLayout, bits=None):
    """Place data symbols and pilots on the grid; reserved REs stay zero.

    Args:
        symbols: ``(n_layers, num_data)`` data symbols in data-set order.
        pilots: Sequence of per-layer pilot arrays from :func:`generate_dmrs`.
        layout: Grid layout.
        bits: Optional payload bits to attach to the grid.
    """
    symbols = np.asarray(symbols)
    if symbols.shape != (layout.n_layers, layout.num_data):
        raise ShapeError(
            f"expected symbols of shape {(layout.n_layers, layout.num_data)}, got {symbols.shape}"
        )
    grid = np.zeros((layout.F * layout.S, layout.n_layers), dtype=np.complex128)
    grid[layout.data_indices, :] = symbols.T
    grid = grid.reshape(layout.F, layout.S, layout.n_layers)
    for n in range(layout.n_layers):
        p = layout.pilot_res(n)
        if len(pilots[n]) != len(p):
            raise ShapeError(f"layer {n}: {len(pilots[n])} pilots for {len(p)} positions")
        grid[p[:, 0], p[:, 1], n] = pilots[n]
    return ResourceGrid(grid, layout, bits)
