"""Losses, training loop and checkpoint persistence."""

from mdx.train.checkpoint import Checkpoint, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from mdx.train.losses import bce_loss, mse_loss, snr_weight, total_loss
from mdx.train.loop import TRACE_COLUMNS, TrainConfig, TrainResult, batch_plan, train, training_step, write_trace

__all__ = [
    "TRACE_COLUMNS", "Checkpoint", "TrainConfig", "TrainResult", "batch_plan", "bce_loss",
    "decode_checkpoint", "encode_checkpoint", "load_checkpoint", "mse_loss", "save_checkpoint",
    "snr_weight", "total_loss", "train", "training_step", "write_trace",
]
