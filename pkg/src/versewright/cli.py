"""Command-line entry point; every module is exposed as a subcommand.

Exit codes: 0 success, 1 usage, 2 validation, 3 I/O, 4 internal invariant
violation.  Stochastic commands require --seed.  Outputs are written
atomically, so an interrupted run never leaves half-written artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import bpe
from .corpus import ingest_corpus, rank_generated, select_for_review, split_corpus
from .emotion_lexicon import (
    CANONICAL_ORDER,
    EmotionCategory,
    load_emotion_lexicon,
    load_psych_lexicon,
)
from .errors import (
    CheckpointError,
    ParseError,
    RatingRangeError,
    ValidationError,
    VersewrightError,
)
from .fsio import atomic_write_text
from .lm import (
    ModelConfig,
    TrainConfig,
    finetune,
    fresh_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .metrics import ReferenceStats, report, report_json, report_tsv
from .pipeline import PipelineConfig, run_pipeline, token_stream
from .review.store import ReviewStore
from .sampler import GenerationConfig, generate_pool

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_INTERNAL = 4


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); we want code 1
        raise UsageError(message)


def data_root() -> Path:
    return Path(os.environ.get("VERSEWRIGHT_DATA", "data"))


def _emotion(name: str) -> EmotionCategory:
    for category in CANONICAL_ORDER:
        if category.value == name:
            return category
    raise ValidationError(
        f"unknown emotion {name!r}; expected one of "
        + ", ".join(c.value for c in CANONICAL_ORDER)
    )


def _load_lexicon(path: Path):
    with open(path, encoding="utf-8") as fh:
        return load_emotion_lexicon(fh)


def _load_psych(path: Path):
    with open(path, encoding="utf-8") as fh:
        return load_psych_lexicon(fh)


def _model_config(args) -> ModelConfig:
    if args.config:
        data = json.loads(Path(args.config).read_text("utf-8"))
        if "model" in data:
            return ModelConfig.from_dict(data["model"])
    return ModelConfig()


def build_parser() -> Parser:
    parser = Parser(prog="versewright", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="label a corpus and write 8 emotion sub-corpora")
    p.add_argument("--corpus", type=Path, default=None)
    p.add_argument("--lexicon", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("train-bpe", help="learn a byte-pair vocabulary")
    p.add_argument("--corpus", type=Path, default=None)
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--out", type=Path, required=True)

    for name in ("train", "finetune"):
        p = sub.add_parser(name, help=f"{name} a model on a corpus")
        p.add_argument("--corpus", type=Path, required=True)
        p.add_argument("--vocab", type=Path, required=True)
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--steps", type=int, required=True)
        p.add_argument("--learning-rate", type=float, default=0.0001)
        p.add_argument("--batch-size", type=int, default=8)
        p.add_argument("--window", type=int, default=None)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--stage", required=True)
        p.add_argument("--config", type=Path, default=None)
        if name == "finetune":
            p.add_argument("--checkpoint", type=Path, required=True)

    p = sub.add_parser("generate", help="sample a poem pool from a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--vocab", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("-n", "--count", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--top-k", type=int, default=40)
    p.add_argument("--temperature", type=float, default=0.75)
    p.add_argument("--max-new-tokens", type=int, default=120)

    p = sub.add_parser("rank", help="rank a poem pool by one emotion's score")
    p.add_argument("--pool", type=Path, required=True, help="directory of .txt poems")
    p.add_argument("--lexicon", type=Path, default=None)
    p.add_argument("--emotion", required=True)
    p.add_argument("--top-n", type=int, default=20)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("select", help="sample poems for review from a ranked file")
    p.add_argument("--ranked", type=Path, required=True)
    p.add_argument("-n", "--count", type=int, default=4)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("metrics", help="text-quality report over a directory of texts")
    p.add_argument("--texts", type=Path, required=True)
    p.add_argument("--psych", type=Path, default=None)
    p.add_argument("--reference", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--json", action="store_true", help="also write a .json report")

    p = sub.add_parser("serve", help="start the review service")
    p.add_argument("--log", type=Path, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", type=Path, default=None)

    p = sub.add_parser("report", help="print a campaign report from an event log")
    p.add_argument("--log", type=Path, required=True)
    p.add_argument("--campaign", required=True)

    p = sub.add_parser("pipeline", help="end-to-end desk-scale run")
    p.add_argument("--corpus", type=Path, default=None)
    p.add_argument("--dreams", type=Path, default=None)
    p.add_argument("--lexicon", type=Path, default=None)
    p.add_argument("--psych", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config", type=Path, default=None)
    return parser


def _corpus_stream(corpus_dir: Path, vocab_path: Path):
    vocab = bpe.load_vocab(vocab_path)
    docs = ingest_corpus(corpus_dir)
    if not docs:
        raise ValidationError(f"no .txt documents under {corpus_dir}")
    return vocab, token_stream(docs, vocab)


def cmd_split(args) -> int:
    corpus = args.corpus or data_root() / "poems"
    lexicon = args.lexicon or data_root() / "lexicons" / "emolex_mini.tsv"
    lex = _load_lexicon(lexicon)
    docs = ingest_corpus(corpus)
    rep = split_corpus(docs, lex, args.out)
    for category in CANONICAL_ORDER:
        print(f"{category.value}\t{rep.doc_counts[category]}\t{rep.token_counts[category]}")
    print(f"unlabeled\t{rep.unlabeled}")
    return EXIT_OK


def cmd_train_bpe(args) -> int:
    corpus = args.corpus or data_root() / "poems"
    docs = ingest_corpus(corpus)
    vocab = bpe.train_bpe([d.body for d in docs], args.vocab_size)
    bpe.save_vocab(vocab, args.out)
    print(f"{vocab.size} tokens ({len(vocab.merges)} merges) -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    vocab, stream = _corpus_stream(args.corpus, args.vocab)
    model_cfg = replace(_model_config(args), vocab_size=vocab.size)
    train_cfg = TrainConfig(
        steps=args.steps,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        seed=args.seed,
        window_len=args.window,
    )
    ckpt = fresh_checkpoint(model_cfg, seed=args.seed, vocab_hash=vocab.content_hash())
    ckpt, losses = finetune(ckpt, stream, train_cfg, args.stage, str(args.corpus), vocab.content_hash())
    save_checkpoint(ckpt, args.out)
    final = f"{losses[-1]:.4f}" if losses else "n/a"
    print(f"stage {args.stage!r}: {args.steps} steps, final loss {final} -> {args.out}")
    return EXIT_OK


def cmd_finetune(args) -> int:
    vocab, stream = _corpus_stream(args.corpus, args.vocab)
    ckpt = load_checkpoint(args.checkpoint)
    train_cfg = TrainConfig(
        steps=args.steps,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        seed=args.seed,
        window_len=args.window,
    )
    ckpt, losses = finetune(ckpt, stream, train_cfg, args.stage, str(args.corpus), vocab.content_hash())
    save_checkpoint(ckpt, args.out)
    chain = " -> ".join(r.stage for r in ckpt.stage_chain)
    print(f"stage chain: {chain} -> {args.out}")
    return EXIT_OK


def cmd_generate(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    vocab = bpe.load_vocab(args.vocab)
    if vocab.content_hash() != ckpt.vocab_hash:
        raise ValidationError("vocab file does not match the checkpoint's tokenizer")
    cfg = GenerationConfig(
        top_k=args.top_k,
        temperature=args.temperature,
        max_new_tokens=args.max_new_tokens,
    )
    poems = generate_pool(ckpt.model(), vocab, cfg, args.count, args.seed)
    provenance = []
    for i, poem in enumerate(poems):
        atomic_write_text(args.out / f"poem_{i:04d}.txt", poem.cleaned + "\n")
        provenance.append(json.dumps({
            "poem": f"poem_{i:04d}",
            "stage_chain": [r.to_dict() for r in ckpt.stage_chain],
            "generation": poem.provenance["generation"],
        }, sort_keys=True))
    atomic_write_text(args.out / "provenance.jsonl", "\n".join(provenance) + "\n")
    print(f"{len(poems)} poems -> {args.out}")
    return EXIT_OK


def cmd_rank(args) -> int:
    lexicon = args.lexicon or data_root() / "lexicons" / "emolex_mini.tsv"
    lex = _load_lexicon(lexicon)
    docs = ingest_corpus(args.pool)
    if not docs:
        raise ValidationError(f"no poems under {args.pool}")
    ranked = rank_generated([d.body for d in docs], lex, _emotion(args.emotion), args.top_n)
    atomic_write_text(
        args.out,
        json.dumps(
            {
                "target": args.emotion,
                "entries": [{"text": t, "score": s} for t, s in ranked.entries],
            },
            indent=2,
            sort_keys=True,
        ) + "\n",
    )
    print(f"top {len(ranked.entries)} of {len(docs)} poems by {args.emotion} -> {args.out}")
    return EXIT_OK


def cmd_select(args) -> int:
    data = json.loads(args.ranked.read_text("utf-8"))
    from .corpus import RankedPool

    ranked = RankedPool(
        target=_emotion(data["target"]),
        entries=[(e["text"], e["score"]) for e in data["entries"]],
    )
    picked = select_for_review(ranked, args.count, args.seed)
    atomic_write_text(args.out, json.dumps(picked, indent=2, sort_keys=True) + "\n")
    print(f"selected {len(picked)} poems -> {args.out}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    psych = args.psych or data_root() / "lexicons" / "psych_mini.csv"
    plex = _load_psych(psych)
    reference = ReferenceStats.load(args.reference)
    docs = ingest_corpus(args.texts)
    if not docs:
        raise ValidationError(f"no .txt files under {args.texts}")
    rep = report([(d.id, d.body) for d in docs], plex, reference)
    atomic_write_text(args.out, report_tsv(rep))
    if args.json:
        atomic_write_text(args.out.with_suffix(".json"), report_json(rep))
    print(report_tsv(rep), end="")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .review.app import create_app

    store = ReviewStore(args.log)
    app = create_app(store, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_report(args) -> int:
    store = ReviewStore(args.log)
    print(json.dumps(store.report(args.campaign), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = PipelineConfig.from_file(args.config) if args.config else None
    run_pipeline(
        corpus_dir=args.corpus or data_root() / "poems",
        dreams_dir=args.dreams or data_root() / "dreams",
        lexicon_path=args.lexicon or data_root() / "lexicons" / "emolex_mini.tsv",
        psych_path=args.psych or data_root() / "lexicons" / "psych_mini.csv",
        out_dir=args.out,
        seed=args.seed,
        scale=args.scale,
        config=config,
    )
    return EXIT_OK


COMMANDS = {
    "split": cmd_split,
    "train-bpe": cmd_train_bpe,
    "train": cmd_train,
    "finetune": cmd_finetune,
    "generate": cmd_generate,
    "rank": cmd_rank,
    "select": cmd_select,
    "metrics": cmd_metrics,
    "serve": cmd_serve,
    "report": cmd_report,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, ParseError, RatingRangeError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (VersewrightError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
