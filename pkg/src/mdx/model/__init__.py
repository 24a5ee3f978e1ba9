"""The MDX model-driven neural receiver."""

from mdx.model.encoding import positional_encoding, tiled_encoding
from mdx.model.mdx import (
    MdxOutput,
    da_ls_estimate,
    dals_equalize,
    mdx_forward,
    resblocks_forward,
)
from mdx.model.params import ModelConfig, MdxParams, block_param_shapes, init_params

__all__ = [
    "MdxOutput", "MdxParams", "ModelConfig", "block_param_shapes", "da_ls_estimate",
    "dals_equalize", "init_params", "mdx_forward", "positional_encoding", "resblocks_forward",
    "tiled_encoding",
]
