"""Document ingestion, emotion scoring, corpus splitting, and pool ranking."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .emotion_lexicon import CANONICAL_ORDER, EmotionCategory, EmotionLexicon
from .errors import ValidationError
from .fsio import atomic_write_text

_WORD_CHARS = "'"


@dataclass(frozen=True)
class Document:
    id: str
    body: str

    @property
    def token_count(self) -> int:
        return len(normalize_tokens(self.body))


@dataclass(frozen=True)
class EmotionScoreVector:
    """Per-emotion token-occurrence counts plus the argmax label.

    ``label`` is None iff every count is zero; ties resolve to the first
    category in canonical order.
    """

    scores: dict[EmotionCategory, int]
    label: EmotionCategory | None

    def as_row(self) -> list[int]:
        return [self.scores[c] for c in CANONICAL_ORDER]


@dataclass(frozen=True)
class SplitReport:
    doc_counts: dict[EmotionCategory, int]
    token_counts: dict[EmotionCategory, int]
    unlabeled: int

    @property
    def total(self) -> int:
        return sum(self.doc_counts.values()) + self.unlabeled


@dataclass(frozen=True)
class RankedPool:
    target: EmotionCategory
    entries: list[tuple[str, int]]  # (poem text, target-emotion score), score-descending

    def poems(self) -> list[str]:
        return [text for text, _ in self.entries]


def normalize_tokens(text: str) -> list[str]:
    """Lowercase and split into scoring tokens.

    Tokens are maximal runs of alphabetic characters and apostrophes; edge
    apostrophes are stripped so only interior ones survive ("don't" is one
    token).  Empty tokens are dropped.
    """
    tokens: list[str] = []
    current: list[str] = []
    for ch in text.lower():
        if ch.isalpha() or ch in _WORD_CHARS:
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    cleaned = [t.strip(_WORD_CHARS) for t in tokens]
    return [t for t in cleaned if t]


def score_text(text: str, lex: EmotionLexicon) -> EmotionScoreVector:
    """Count token occurrences associated with each emotion and pick the label."""
    counts: Counter[EmotionCategory] = Counter()
    for token in normalize_tokens(text):
        for emotion in lex.emotions_of(token):
            counts[emotion] += 1
    scores = {c: counts.get(c, 0) for c in CANONICAL_ORDER}
    label: EmotionCategory | None = None
    best = 0
    for c in CANONICAL_ORDER:
        if scores[c] > best:
            best = scores[c]
            label = c
    return EmotionScoreVector(scores=scores, label=label)


def score_document(doc: Document, lex: EmotionLexicon) -> EmotionScoreVector:
    return score_text(doc.body, lex)


def normalized_scores(text: str, lex: EmotionLexicon) -> dict[EmotionCategory, float]:
    """Per-token emotion rates; optional mode, never used for labeling.

    Raw totals are length-biased by construction; this exposes the
    length-corrected view for analyses that want it.
    """
    tokens = normalize_tokens(text)
    vector = score_text(text, lex)
    if not tokens:
        return {c: 0.0 for c in CANONICAL_ORDER}
    return {c: vector.scores[c] / len(tokens) for c in CANONICAL_ORDER}


def ingest_corpus(directory: str | Path) -> list[Document]:
    """Read every ``.txt`` file under ``directory`` as one Document.

    Document ids are relative paths without extension; results are sorted by
    id.  Non-UTF-8 files raise an error naming the file.
    """
    root = Path(directory)
    docs: list[Document] = []
    for path in sorted(root.rglob("*.txt")):
        try:
            body = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise ValidationError(f"{path}: not valid UTF-8 ({exc})") from exc
        rel = path.relative_to(root).as_posix()
        docs.append(Document(id=rel[: -len(".txt")], body=body))
    docs.sort(key=lambda d: d.id)
    return docs


def split_corpus(
    docs: list[Document], lex: EmotionLexicon, out_dir: str | Path
) -> SplitReport:
    """Write each labeled document under its emotion's subdirectory.

    Also writes ``labels.tsv`` (id, the 8 scores in canonical order, label)
    for every document, labeled or not.  Unlabeled documents are listed in
    the manifest but no file is copied.  Output depends only on the set of
    documents: processing is ordered by id.
    """
    out = Path(out_dir)
    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            raise ValidationError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)

    for emotion in CANONICAL_ORDER:
        (out / emotion.value).mkdir(parents=True, exist_ok=True)

    doc_counts = {c: 0 for c in CANONICAL_ORDER}
    token_counts = {c: 0 for c in CANONICAL_ORDER}
    unlabeled = 0
    manifest_lines = ["id\t" + "\t".join(c.value for c in CANONICAL_ORDER) + "\tlabel"]
    for doc in sorted(docs, key=lambda d: d.id):
        vector = score_document(doc, lex)
        label_name = vector.label.value if vector.label else ""
        manifest_lines.append(
            "\t".join([doc.id, *map(str, vector.as_row()), label_name])
        )
        if vector.label is None:
            unlabeled += 1
            continue
        doc_counts[vector.label] += 1
        token_counts[vector.label] += doc.token_count
        target = out / vector.label.value / f"{doc.id}.txt"
        target.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_text(target, doc.body)

    atomic_write_text(out / "labels.tsv", "\n".join(manifest_lines) + "\n")
    return SplitReport(doc_counts=doc_counts, token_counts=token_counts, unlabeled=unlabeled)


def rank_generated(
    pool: list[str], lex: EmotionLexicon, target: EmotionCategory, top_n: int
) -> RankedPool:
    """Order a poem pool by its score on the target emotion alone.

    Stable on ties (original pool order), truncated to min(top_n, pool size).
    """
    if not pool:
        raise ValidationError("cannot rank an empty pool")
    if top_n < 1:
        raise ValidationError("top_n must be >= 1")
    scored = [(text, score_text(text, lex).scores[target]) for text in pool]
    ranked = sorted(scored, key=lambda pair: -pair[1])  # sorted() is stable
    return RankedPool(target=target, entries=ranked[: min(top_n, len(ranked))])


def select_for_review(ranked: RankedPool, n: int, seed: int) -> list[str]:
    """Sample n distinct poems uniformly without replacement, reproducibly."""
    poems = ranked.poems()
    if n > len(poems):
        raise ValidationError(f"cannot select {n} poems from a pool of {len(poems)}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    indices = rng.choice(len(poems), size=n, replace=False)
    return [poems[i] for i in indices]
