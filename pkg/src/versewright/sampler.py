"""Top-K / temperature sampling and the end-of-poem cleanup pass."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .bpe import SEPARATOR_ID, BpeVocab, decode
from .errors import ValidationError
from .lm.model import IncrementalDecoder, Model, forward

TERMINAL_PUNCTUATION = ".!?,;:—"


@dataclass(frozen=True)
class GenerationConfig:
    top_k: int = 40
    temperature: float = 0.75
    max_new_tokens: int = 120
    seed: int | tuple[int, ...] = 0
    prompt_tokens: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise ValidationError("top_k must be >= 1")
        if not 0 < self.temperature <= 2:
            raise ValidationError("temperature must be in (0, 2]")
        if self.max_new_tokens < 1:
            raise ValidationError("max_new_tokens must be >= 1")

    def to_dict(self) -> dict:
        return {
            "top_k": self.top_k,
            "temperature": self.temperature,
            "max_new_tokens": self.max_new_tokens,
            "seed": list(self.seed) if isinstance(self.seed, tuple) else self.seed,
            "prompt_tokens": list(self.prompt_tokens),
        }


@dataclass(frozen=True)
class Poem:
    raw: str
    cleaned: str
    tokens: tuple[int, ...] = field(repr=False, default=())
    provenance: dict = field(default_factory=dict)


def filter_top_k(logits: np.ndarray, cfg: GenerationConfig) -> np.ndarray:
    """Temperature-scale logits, keep the top_k entries, renormalize.

    Ties at the k-th kept slot break toward the higher logit, then the lower
    token id.  Filtering happens before renormalization, so the kept
    probabilities sum to 1.
    """
    scaled = np.asarray(logits, dtype=np.float64) / cfg.temperature
    k = min(cfg.top_k, scaled.size)
    order = np.lexsort((np.arange(scaled.size), -scaled))
    keep = order[:k]
    kept = np.exp(scaled[keep] - scaled[keep].max())
    probs = np.zeros_like(scaled)
    probs[keep] = kept / kept.sum()
    return probs


def next_token_distribution(model: Model, prefix, cfg: GenerationConfig) -> np.ndarray:
    """Filtered next-token probabilities after the given prefix.

    Tokens outside the context window are dropped from the left.
    """
    prefix = list(prefix)
    if not prefix:
        raise ValidationError("prefix must contain at least one token")
    window = prefix[-model.config.context_len :]
    return filter_top_k(forward(model, window)[-1], cfg)


def generate(model: Model, vocab: BpeVocab, cfg: GenerationConfig) -> Poem:
    """Sample a poem token by token until the separator or the length cap.

    Generation starts from the separator token alone unless prompt tokens
    are given, and is reproducible for a fixed seed.
    """
    if model.config.vocab_size != vocab.size:
        raise ValidationError(
            f"model vocabulary ({model.config.vocab_size}) does not match "
            f"tokenizer ({vocab.size})"
        )
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    decoder = IncrementalDecoder(model)
    logits = None
    for token in (SEPARATOR_ID, *cfg.prompt_tokens):
        logits = decoder.feed(token)
    generated: list[int] = []
    for _ in range(cfg.max_new_tokens):
        probs = filter_top_k(logits, cfg)
        token = int(rng.choice(probs.size, p=probs))
        assert probs[token] > 0, "sampled token escaped the top-k support"
        if token == SEPARATOR_ID:
            break
        generated.append(token)
        logits = decoder.feed(token)
    raw = decode(vocab, generated)
    return Poem(
        raw=raw,
        cleaned=clean_text(raw),
        tokens=tuple(generated),
        provenance={"generation": cfg.to_dict()},
    )


def generate_pool(
    model: Model, vocab: BpeVocab, cfg: GenerationConfig, n: int, seed: int
) -> list[Poem]:
    """n independent poems with per-poem seeds derived from (seed, index)."""
    if n < 1:
        raise ValidationError("pool size must be >= 1")
    return [
        generate(model, vocab, replace(cfg, seed=(seed, index))) for index in range(n)
    ]


def clean_text(raw: str) -> str:
    """Cut a generation off at its last natural stopping point.

    Prefers the last line ending in terminal punctuation; otherwise keeps
    everything through the last newline (kept as terminator so a second pass
    is a no-op); as a last resort drops the trailing partial word.  Only
    trailing content is ever removed.
    """
    lines = raw.split("\n")
    for i in range(len(lines) - 1, -1, -1):
        stripped = lines[i].rstrip()
        if stripped and stripped[-1] in TERMINAL_PUNCTUATION:
            return "\n".join(lines[: i + 1]).rstrip()
    cut = raw.rfind("\n")
    if cut != -1 and raw[: cut + 1].strip():
        return raw[: cut + 1]
    text = raw.rstrip()
    last_space = max((i for i, ch in enumerate(text) if ch.isspace()), default=-1)
    if last_space == -1:
        return ""
    return text[:last_space].rstrip()
