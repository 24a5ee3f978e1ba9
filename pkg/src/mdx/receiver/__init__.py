"""Classical receiver building blocks shared by the baselines and the MDX model."""

from mdx.receiver.baseline import BaselineKind, LlrGrid, gather_data, run_baseline
from mdx.receiver.equalizer import (
    EqualizerOutput,
    lmmse_equalize,
    max_log_demap,
    prb_index,
    prb_lookup,
)
from mdx.receiver.estimation import (
    EstimateSource,
    estimate_noise_variance,
    interpolate_to_grid,
    pa_ls_estimate,
    time_interpolation_weights,
)
from mdx.receiver.kernels import lmmse_kernel

__all__ = [
    "BaselineKind", "EqualizerOutput", "EstimateSource", "LlrGrid", "estimate_noise_variance",
    "gather_data", "interpolate_to_grid", "lmmse_equalize", "lmmse_kernel", "max_log_demap",
    "pa_ls_estimate", "prb_index", "prb_lookup", "run_baseline", "time_interpolation_weights",
]
