"""Training loop, checkpoints and parameter accounting"""

from .checkpoint import FORMAT_VERSION, CheckpointRecord, load_checkpoint, save_checkpoint
from .params import (
    adapter_params,
    backbone_params,
    case_params,
    cda_params,
    count_params,
    decoder_params,
    expert_params,
    extractor_params,
    hand_count,
)
from .trainer import FINAL_CHECKPOINT, LOG_NAME, Trainer, TrainResult, read_loss_log

__all__ = [
    "FORMAT_VERSION",
    "CheckpointRecord",
    "load_checkpoint",
    "save_checkpoint",
    "adapter_params",
    "backbone_params",
    "case_params",
    "cda_params",
    "count_params",
    "decoder_params",
    "expert_params",
    "extractor_params",
    "hand_count",
    "FINAL_CHECKPOINT",
    "LOG_NAME",
    "Trainer",
    "TrainResult",
    "read_loss_log",
]
