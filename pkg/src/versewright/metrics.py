"""Text-quality measures: FRE, FKGL, IMGc, CNCc, LDTTRa, and the three
text-easability percentile proxies.

The percentile scores are documented proxies, not the proprietary
principal-component compositions: a raw index is z-scored against bundled
reference statistics and mapped through the normal CDF.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from statistics import NormalDist

from .corpus import normalize_tokens
from .emotion_lexicon import PsychLexicon
from .errors import ValidationError

_VOWELS = set("aeiouy")
_SENTENCE_ENDERS = ".!?"
_VERB_SUFFIXES = ("ing", "ed")
_NORMAL = NormalDist()


def _load_wordlist(name: str) -> frozenset[str]:
    text = resources.files("versewright.data").joinpath(name).read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = _load_wordlist("stopwords.txt")
PRONOUNS = _load_wordlist("pronouns.txt")
COMMON_WORDS = _load_wordlist("common_words.txt")


@dataclass(frozen=True)
class TextStats:
    sentence_count: int
    word_count: int
    syllable_count: int
    type_count: int
    content_word_hits: int


@dataclass(frozen=True)
class ReferenceStats:
    """Frozen means/standard deviations of the raw proxy indices."""

    means: dict[str, float]
    stds: dict[str, float]
    provenance: str

    @classmethod
    def from_json(cls, text: str) -> "ReferenceStats":
        data = json.loads(text)
        return cls(means=data["means"], stds=data["stds"], provenance=data["provenance"])

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ReferenceStats":
        if path is None:
            text = resources.files("versewright.data").joinpath(
                "reference_stats.json"
            ).read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        return cls.from_json(text)


def count_syllables(word: str) -> int:
    """Vowel-group heuristic, minimum 1.

    Groups split between 'o' and 'e' (poem, poetry); a terminal silent 'e'
    is discounted unless it ends a consonant+'le' cluster (table).
    """
    w = "".join(ch for ch in word.lower() if ch.isalpha())
    if not w:
        return 1
    groups = 0
    prev_vowel = False
    for i, ch in enumerate(w):
        is_vowel = ch in _VOWELS
        if is_vowel and (not prev_vowel or (ch == "e" and w[i - 1] == "o")):
            groups += 1
        prev_vowel = is_vowel
    if (
        groups > 1
        and w.endswith("e")
        and not (len(w) >= 3 and w.endswith("le") and w[-3] not in _VOWELS)
    ):
        groups -= 1
    return max(groups, 1)


def segment_sentences(text: str) -> list[str]:
    """Split after . ! ? followed by whitespace or end of text."""
    sentences: list[str] = []
    current: list[str] = []
    for i, ch in enumerate(text):
        current.append(ch)
        at_end = i + 1 == len(text)
        if ch in _SENTENCE_ENDERS and (at_end or text[i + 1].isspace()):
            sentence = "".join(current).strip()
            if sentence:
                sentences.append(sentence)
            current = []
    tail = "".join(current).strip()
    if tail:
        sentences.append(tail)
    return sentences


def text_stats(text: str, plex: PsychLexicon | None = None) -> TextStats:
    words = normalize_tokens(text)
    content = [w for w in words if w not in STOPWORDS]
    hits = sum(1 for w in content if plex and plex.ratings_of(w)) if plex else 0
    return TextStats(
        sentence_count=max(len(segment_sentences(text)), 1 if words else 0),
        word_count=len(words),
        syllable_count=sum(count_syllables(w) for w in words),
        type_count=len(set(words)),
        content_word_hits=hits,
    )


def _words_sentences_syllables(text: str) -> tuple[int, int, int]:
    words = normalize_tokens(text)
    if not words:
        raise ValidationError("text has no words")
    sentences = segment_sentences(text)
    return len(words), max(len(sentences), 1), sum(count_syllables(w) for w in words)


def fre(text: str) -> float:
    """Flesch Reading Ease, clamped to its stated 0-100 scale."""
    n_words, n_sentences, n_syllables = _words_sentences_syllables(text)
    raw = 206.835 - 1.015 * (n_words / n_sentences) - 84.6 * (n_syllables / n_words)
    return min(max(raw, 0.0), 100.0)


def fkgl(text: str) -> float:
    """Flesch-Kincaid Grade Level, clamped to grades 0-18."""
    n_words, n_sentences, n_syllables = _words_sentences_syllables(text)
    raw = 0.39 * (n_words / n_sentences) + 11.8 * (n_syllables / n_words) - 15.59
    return min(max(raw, 0.0), 18.0)


def _psych_mean(text: str, plex: PsychLexicon, index: int) -> float | None:
    ratings = [
        plex.ratings_of(w)[index]
        for w in normalize_tokens(text)
        if w not in STOPWORDS and plex.ratings_of(w) is not None
    ]
    if not ratings:
        return None
    return sum(ratings) / len(ratings)


def imageability(text: str, plex: PsychLexicon) -> float | None:
    """Occurrence-weighted mean imageability of content words; None if no hits."""
    return _psych_mean(text, plex, 0)


def concreteness(text: str, plex: PsychLexicon) -> float | None:
    return _psych_mean(text, plex, 1)


def ldttr(text: str) -> float:
    """Type:token ratio over all scoring tokens."""
    words = normalize_tokens(text)
    if not words:
        raise ValidationError("text has no tokens")
    return len(set(words)) / len(words)


def _content_set(sentence: str) -> set[str]:
    return {w for w in normalize_tokens(sentence) if w not in STOPWORDS}


def pcref_raw(text: str) -> float:
    """Mean content-token Jaccard overlap between adjacent sentences."""
    sentences = segment_sentences(text)
    if len(sentences) < 2:
        return 0.0
    overlaps = []
    for left, right in zip(sentences, sentences[1:]):
        a, b = _content_set(left), _content_set(right)
        union = a | b
        overlaps.append(len(a & b) / len(union) if union else 0.0)
    return sum(overlaps) / len(overlaps)


def pcsyn_raw(text: str) -> float:
    """Negative mean sentence length in words (shorter is simpler)."""
    sentences = segment_sentences(text)
    if not sentences:
        return 0.0
    lengths = [len(normalize_tokens(s)) for s in sentences]
    return -sum(lengths) / len(lengths)


def pcnar_raw(text: str) -> float:
    """Pronoun and verb-suffix token rate minus the rare-word rate."""
    words = normalize_tokens(text)
    if not words:
        return 0.0
    narrative = sum(
        1 for w in words if w in PRONOUNS or w.endswith(_VERB_SUFFIXES)
    )
    rare = sum(1 for w in words if w not in COMMON_WORDS and w not in PRONOUNS)
    return narrative / len(words) - rare / len(words)


def percentile(raw: float, mean: float, std: float) -> float:
    z = (raw - mean) / std
    return _NORMAL.cdf(z) * 100.0


def pc_scores(text: str, reference: ReferenceStats) -> tuple[float, float, float]:
    """(PCREFp, PCSYNp, PCNARp) percentiles against the reference corpus."""
    return tuple(
        percentile(raw_fn(text), reference.means[key], reference.stds[key])
        for key, raw_fn in (
            ("pcref", pcref_raw),
            ("pcsyn", pcsyn_raw),
            ("pcnar", pcnar_raw),
        )
    )


COLUMNS = ("FRE", "FKGL", "IMGc", "CNCc", "LDTTRa", "PCREFp", "PCSYNp", "PCNARp")


@dataclass(frozen=True)
class MetricsReport:
    rows: list[dict]  # per text: {"id": ..., metric values, None where undefined}
    means: dict[str, float | None]


def evaluate_text(
    text_id: str, text: str, plex: PsychLexicon, reference: ReferenceStats
) -> dict:
    ref, syn, nar = pc_scores(text, reference)
    return {
        "id": text_id,
        "FRE": fre(text),
        "FKGL": fkgl(text),
        "IMGc": imageability(text, plex),
        "CNCc": concreteness(text, plex),
        "LDTTRa": ldttr(text),
        "PCREFp": ref,
        "PCSYNp": syn,
        "PCNARp": nar,
    }


def report(
    texts: list[tuple[str, str]], plex: PsychLexicon, reference: ReferenceStats
) -> MetricsReport:
    """Per-text metrics plus column means.

    Texts with undefined IMGc/CNCc are excluded from those two means only.
    """
    if not texts:
        raise ValidationError("report needs at least one text")
    rows = [evaluate_text(text_id, body, plex, reference) for text_id, body in texts]
    means: dict[str, float | None] = {}
    for column in COLUMNS:
        values = [row[column] for row in rows if row[column] is not None]
        means[column] = sum(values) / len(values) if values else None
    return MetricsReport(rows=rows, means=means)


def _format_value(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def report_tsv(rep: MetricsReport) -> str:
    lines = ["text\t" + "\t".join(COLUMNS)]
    for row in rep.rows:
        lines.append(row["id"] + "\t" + "\t".join(_format_value(row[c]) for c in COLUMNS))
    lines.append("MEAN\t" + "\t".join(_format_value(rep.means[c]) for c in COLUMNS))
    return "\n".join(lines) + "\n"


def report_json(rep: MetricsReport) -> str:
    payload = {"texts": rep.rows, "mean": rep.means, "columns": list(COLUMNS)}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
