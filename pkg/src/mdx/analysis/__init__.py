"""Complexity accounting and link-quality metrics."""

from mdx.analysis.complexity import (
    ComplexityReport,
    lmmse_mult_count,
    model_complexity,
    resblock_mult_count,
    sepconv_mult_count,
)
from mdx.analysis.metrics import REPORT_COLUMNS, MetricAccumulator

__all__ = [
    "REPORT_COLUMNS", "ComplexityReport", "MetricAccumulator", "lmmse_mult_count",
    "model_complexity", "resblock_mult_count", "sepconv_mult_count",
]
