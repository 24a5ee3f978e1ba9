"""Resource grid, DMRS and QAM mapping."""

from mdx.phy.grid import (
    DEFAULT_DMRS_SYMBOLS,
    GridLayout,
    ResourceGrid,
    build_grid_layout,
    generate_dmrs,
    map_to_grid,
)
from mdx.phy.qam import Constellation, hard_demap, qam, qam_modulate

__all__ = [
    "DEFAULT_DMRS_SYMBOLS", "Constellation", "GridLayout", "ResourceGrid", "build_grid_layout",
    "generate_dmrs", "hard_demap", "map_to_grid", "qam", "qam_modulate",
]
