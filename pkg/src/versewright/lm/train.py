"""Training loop (Adam, no schedule) and staged fine-tuning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError, VersewrightError, VocabMismatchError
from .model import Model, loss_and_grads

FINAL_LOSS_WINDOW = 50


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    learning_rate: float = 0.0001
    batch_size: int = 8
    seed: int = 0
    window_len: int | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.steps < 0:
            raise ValidationError("steps must be >= 0")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "window_len": self.window_len,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_eps": self.adam_eps,
        }


@dataclass(frozen=True)
class StageRecord:
    stage: str
    corpus_id: str
    steps: int
    final_loss: float | None

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "corpus_id": self.corpus_id,
            "steps": self.steps,
            "final_loss": self.final_loss,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StageRecord":
        return cls(**data)


def train(model: Model, stream, cfg: TrainConfig) -> tuple[Model, list[float]]:
    """Run cfg.steps Adam steps on windows sampled uniformly from the stream.

    The input model is not mutated; the returned model and per-step loss
    curve are fully determined by (model, stream, cfg).
    """
    ids = np.asarray(stream, dtype=np.int64)
    if ids.size < 2:
        raise ValidationError("token stream too short for a training window")

    model = model.copy()
    if cfg.steps == 0:
        return model, []

    window = cfg.window_len or model.config.context_len
    window = max(2, min(window, model.config.context_len, ids.size))
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    dtype = model.config.dtype

    m = {k: np.zeros_like(v) for k, v in model.params.items()}
    v = {k: np.zeros_like(p) for k, p in model.params.items()}
    lr = np.asarray(cfg.learning_rate, dtype=dtype)
    b1 = np.asarray(cfg.beta1, dtype=dtype)
    b2 = np.asarray(cfg.beta2, dtype=dtype)
    eps = np.asarray(cfg.adam_eps, dtype=dtype)

    losses: list[float] = []
    for step in range(1, cfg.steps + 1):
        starts = rng.integers(0, ids.size - window + 1, size=cfg.batch_size)
        batch = np.stack([ids[s : s + window] for s in starts])
        ce, grads = loss_and_grads(model, batch)
        losses.append(ce)
        bc1 = np.asarray(1.0 - cfg.beta1**step, dtype=dtype)
        bc2 = np.asarray(1.0 - cfg.beta2**step, dtype=dtype)
        for name, p in model.params.items():
            g = grads[name]
            m[name] = b1 * m[name] + (1 - b1) * g
            v[name] = b2 * v[name] + (1 - b2) * g * g
            p -= lr * (m[name] / bc1) / (np.sqrt(v[name] / bc2) + eps)
        if not model.all_finite():
            raise VersewrightError(f"non-finite parameter after step {step}")
    return model, losses


def finetune(ckpt, stream, cfg: TrainConfig, stage_name: str, corpus_id: str, vocab_hash: str):
    """Resume training from a checkpoint and append one stage to its chain.

    Refuses to run when the tokenizer hash differs from the one the
    checkpoint was trained with.
    """
    from .checkpoint import ModelCheckpoint

    if vocab_hash != ckpt.vocab_hash:
        raise VocabMismatchError(
            f"checkpoint was trained with vocab {ckpt.vocab_hash[:12]}..., "
            f"got {vocab_hash[:12]}..."
        )
    model = Model(ckpt.config, {k: p.copy() for k, p in ckpt.params.items()})
    trained, losses = train(model, stream, cfg)
    tail = losses[-FINAL_LOSS_WINDOW:]
    final_loss = float(np.mean(tail)) if tail else None
    record = StageRecord(
        stage=stage_name, corpus_id=corpus_id, steps=cfg.steps, final_loss=final_loss
    )
    return ModelCheckpoint(
        config=ckpt.config,
        params=trained.params,
        stage_chain=ckpt.stage_chain + (record,),
        vocab_hash=ckpt.vocab_hash,
    ), losses
