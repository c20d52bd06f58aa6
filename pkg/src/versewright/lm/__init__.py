"""Desk-scale decoder-only transformer language model."""

from .model import Model, ModelConfig, forward, init_model, loss, param_count
from .train import StageRecord, TrainConfig, finetune, train
from .checkpoint import (
    ModelCheckpoint,
    fresh_checkpoint,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "Model",
    "ModelConfig",
    "ModelCheckpoint",
    "StageRecord",
    "TrainConfig",
    "finetune",
    "forward",
    "fresh_checkpoint",
    "init_model",
    "load_checkpoint",
    "loss",
    "param_count",
    "save_checkpoint",
    "train",
]
