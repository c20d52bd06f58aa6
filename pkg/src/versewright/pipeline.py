"""End-to-end desk-scale reproduction: split, tokenize, train, generate,
rank, select, campaign creation, metrics, and a content-hash manifest.

Every count from the full-scale protocol (12,000 steps, pool of 1,000,
top 20, 4 per category) scales by one factor; every random choice derives
from the single global seed, so a rerun produces a byte-identical tree.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import bpe
from .corpus import (
    Document,
    ingest_corpus,
    normalize_tokens,
    rank_generated,
    select_for_review,
    split_corpus,
)
from .emotion_lexicon import (
    CANONICAL_ORDER,
    load_emotion_lexicon,
    load_psych_lexicon,
)
from .errors import ValidationError
from .fsio import atomic_write_text, tree_manifest
from .lm import ModelConfig, TrainConfig, finetune, fresh_checkpoint, save_checkpoint
from .metrics import ReferenceStats, report, report_json, report_tsv
from .review.store import Campaign, CampaignItem, ReviewStore
from .sampler import GenerationConfig, generate_pool

# Full-scale counts from the source protocol.
FULL_STEPS = 12000
FULL_POOL = 1000
FULL_TOP_N = 20
FULL_SELECT = 4


@dataclass(frozen=True)
class PipelineConfig:
    steps: int = FULL_STEPS
    pool_size: int = FULL_POOL
    top_n: int = FULL_TOP_N
    select_n: int = FULL_SELECT
    vocab_size: int = 2000
    model: ModelConfig = field(default_factory=ModelConfig)
    # desk-sized windows: a 64-token span covers most of a mini-corpus poem
    train: TrainConfig = field(
        default_factory=lambda: TrainConfig(steps=FULL_STEPS, batch_size=4, window_len=64)
    )
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    reviewers: tuple[str, ...] = tuple(f"reviewer-{i:02d}" for i in range(1, 11))

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "pool_size": self.pool_size,
            "top_n": self.top_n,
            "select_n": self.select_n,
            "vocab_size": self.vocab_size,
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "generation": self.generation.to_dict(),
            "reviewers": list(self.reviewers),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        out = cls(
            steps=data.get("steps", FULL_STEPS),
            pool_size=data.get("pool_size", FULL_POOL),
            top_n=data.get("top_n", FULL_TOP_N),
            select_n=data.get("select_n", FULL_SELECT),
            vocab_size=data.get("vocab_size", 2000),
            model=ModelConfig.from_dict(data["model"]) if "model" in data else ModelConfig(),
            train=TrainConfig(**_train_args(data)) if "train" in data else TrainConfig(steps=FULL_STEPS),
            generation=GenerationConfig(**_gen_args(data)) if "generation" in data else GenerationConfig(),
            reviewers=tuple(data.get("reviewers", cls().reviewers)),
        )
        return out

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def _train_args(data: dict) -> dict:
    args = dict(data["train"])
    return args


def _gen_args(data: dict) -> dict:
    args = dict(data["generation"])
    if isinstance(args.get("seed"), list):
        args["seed"] = tuple(args["seed"])
    args["prompt_tokens"] = tuple(args.get("prompt_tokens", ()))
    return args


def scaled(count: int, scale: float) -> int:
    return max(1, round(count * scale))


def derive_seed(seed: int, label: str) -> int:
    """Stable 64-bit sub-seed for one named pipeline phase."""
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def token_stream(docs: list[Document], vocab: bpe.BpeVocab) -> np.ndarray:
    ids: list[int] = [bpe.SEPARATOR_ID]
    for doc in docs:
        ids.extend(bpe.encode(vocab, doc.body))
        ids.append(bpe.SEPARATOR_ID)
    return np.asarray(ids, dtype=np.int64)


def run_pipeline(
    corpus_dir: str | Path,
    dreams_dir: str | Path,
    lexicon_path: str | Path,
    psych_path: str | Path,
    out_dir: str | Path,
    seed: int,
    scale: float = 1.0,
    config: PipelineConfig | None = None,
    log=print,
) -> dict:
    """Run the whole desk pipeline; returns the artifact manifest."""
    if scale <= 0:
        raise ValidationError("scale must be positive")
    cfg = config or PipelineConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(lexicon_path, encoding="utf-8") as fh:
        lex = load_emotion_lexicon(fh)
    with open(psych_path, encoding="utf-8") as fh:
        plex = load_psych_lexicon(fh)
    reference = ReferenceStats.load()

    steps = scaled(cfg.steps, scale)
    pool_size = scaled(cfg.pool_size, scale)
    top_n = scaled(cfg.top_n, scale)
    select_n = min(scaled(cfg.select_n, scale), top_n)

    log(f"[pipeline] scale={scale} steps={steps} pool={pool_size} top={top_n} select={select_n}")

    docs = ingest_corpus(corpus_dir)
    if not docs:
        raise ValidationError(f"no .txt documents under {corpus_dir}")
    dreams = ingest_corpus(dreams_dir)
    if not dreams:
        raise ValidationError(f"no .txt documents under {dreams_dir}")

    split_report = split_corpus(docs, lex, out / "split")
    log(f"[pipeline] split: {sum(split_report.doc_counts.values())} labeled, "
        f"{split_report.unlabeled} unlabeled")

    vocab = bpe.train_bpe([doc.body for doc in docs] + [d.body for d in dreams], cfg.vocab_size)
    bpe.save_vocab(vocab, out / "bpe.vocab")
    vocab_hash = vocab.content_hash()
    log(f"[pipeline] bpe vocabulary: {vocab.size} tokens")

    model_cfg = replace(cfg.model, vocab_size=vocab.size)
    base_stream = token_stream(docs, vocab)

    def train_cfg(label: str) -> TrainConfig:
        return replace(cfg.train, steps=steps, seed=derive_seed(seed, label))

    models_dir = out / "models"
    base = fresh_checkpoint(model_cfg, seed=derive_seed(seed, "init"), vocab_hash=vocab_hash)
    base, _ = finetune(base, base_stream, train_cfg("train:base"), "base", "poems:all", vocab_hash)
    save_checkpoint(base, models_dir / "base.ckpt")
    log(f"[pipeline] base model trained ({steps} steps, "
        f"final loss {base.stage_chain[-1].final_loss:.3f})")

    emotion_models: dict[str, Path] = {}
    checkpoints = {}
    for emotion in CANONICAL_ORDER:
        sub_docs = [d for d in docs if (out / "split" / emotion.value / f"{d.id}.txt").exists()]
        if not sub_docs:
            continue
        stream = token_stream(sub_docs, vocab)
        ckpt, _ = finetune(
            base, stream, train_cfg(f"train:{emotion.value}"),
            emotion.value, f"poems:{emotion.value}", vocab_hash,
        )
        path = models_dir / f"{emotion.value}.ckpt"
        save_checkpoint(ckpt, path)
        emotion_models[emotion.value] = path
        checkpoints[emotion.value] = ckpt
        log(f"[pipeline] {emotion.value} model trained "
            f"(final loss {ckpt.stage_chain[-1].final_loss:.3f})")

    dream_stream = token_stream(dreams, vocab)
    dream_mid, _ = finetune(base, dream_stream, train_cfg("train:dream"), "dream", "dreams:all", vocab_hash)
    dream_ckpt, _ = finetune(
        dream_mid, base_stream, train_cfg("train:dream-poetry"), "poetry", "poems:all", vocab_hash
    )
    save_checkpoint(dream_ckpt, models_dir / "dream.ckpt")
    checkpoints["dream"] = dream_ckpt
    log(f"[pipeline] dream model trained (chain: "
        f"{' -> '.join(r.stage for r in dream_ckpt.stage_chain)})")

    selected: dict[str, list[str]] = {}
    metric_texts: dict[str, list[tuple[str, str]]] = {}
    for name, ckpt in sorted(checkpoints.items()):
        model = ckpt.model()
        gen_cfg = replace(cfg.generation, seed=0)
        poems = generate_pool(model, vocab, gen_cfg, pool_size, derive_seed(seed, f"pool:{name}"))
        pool_dir = out / "pools" / name
        provenance_lines = []
        for idx, poem in enumerate(poems):
            atomic_write_text(pool_dir / f"poem_{idx:04d}.txt", poem.cleaned + "\n")
            provenance_lines.append(json.dumps({
                "poem": f"poem_{idx:04d}",
                "stage_chain": [r.to_dict() for r in ckpt.stage_chain],
                "generation": poem.provenance["generation"],
            }, sort_keys=True))
        atomic_write_text(pool_dir / "provenance.jsonl", "\n".join(provenance_lines) + "\n")

        cleaned = [p.cleaned for p in poems]
        if name == "dream":
            # the dream evaluation samples its pool directly, no emotion ranking
            picked = _sample_pool(cleaned, select_n, derive_seed(seed, "select:dream"))
        else:
            ranked = rank_generated(cleaned, lex, _emotion_by_name(name), top_n)
            atomic_write_text(
                out / "ranked" / f"{name}.json",
                json.dumps(
                    {
                        "target": name,
                        "entries": [{"text": t, "score": s} for t, s in ranked.entries],
                    },
                    indent=2, sort_keys=True,
                ) + "\n",
            )
            picked = select_for_review(ranked, min(select_n, len(ranked.entries)),
                                       derive_seed(seed, f"select:{name}"))
        selected[name] = picked
        atomic_write_text(
            out / "selected" / f"{name}.json",
            json.dumps(picked, indent=2, sort_keys=True) + "\n",
        )
        # a weakly trained model can emit poems that clean down to nothing;
        # the readability formulas need at least one word
        metric_texts[name] = [
            (f"{name}-{i}", text)
            for i, text in enumerate(picked)
            if normalize_tokens(text)
        ]
        log(f"[pipeline] {name}: pool {len(poems)}, selected {len(picked)}")

    store = ReviewStore(out / "review" / "events.jsonl", fsync=False)
    emotion_items = []
    for name in sorted(selected):
        if name == "dream":
            continue
        for i, text in enumerate(selected[name]):
            emotion_items.append(CampaignItem(id=f"{name}-{i}", text=text, target=name))
    if emotion_items:
        store.create_campaign(Campaign(
            id="emotion-campaign",
            kind="emotion",
            items=tuple(emotion_items),
            dimensions=tuple(c.value for c in CANONICAL_ORDER),
            reviewers=cfg.reviewers,
        ))
    if "dream" in selected:
        store.create_campaign(Campaign(
            id="dream-campaign",
            kind="dream",
            items=tuple(
                CampaignItem(id=f"dream-{i}", text=text)
                for i, text in enumerate(selected["dream"])
            ),
            dimensions=("quality1", "quality2", "quality3"),
            reviewers=cfg.reviewers,
        ))
    log("[pipeline] campaigns written to review/events.jsonl")

    for name, texts in sorted(metric_texts.items()):
        if not texts:
            continue
        rep = report(texts, plex, reference)
        atomic_write_text(out / "metrics" / f"{name}.tsv", report_tsv(rep))
        atomic_write_text(out / "metrics" / f"{name}.json", report_json(rep))

    manifest = {
        "seed": seed,
        "scale": scale,
        "config": cfg.to_dict(),
        "files": tree_manifest(out),
    }
    atomic_write_text(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    log(f"[pipeline] wrote {len(manifest['files'])} artifacts to {out}")
    return manifest


def _sample_pool(pool: list[str], n: int, seed: int) -> list[str]:
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    indices = rng.choice(len(pool), size=min(n, len(pool)), replace=False)
    return [pool[i] for i in indices]


def _emotion_by_name(name: str):
    for category in CANONICAL_ORDER:
        if category.value == name:
            return category
    raise ValidationError(f"unknown emotion {name!r}")
