"""Word-level emotion lexicon (EmoLex TSV format) and psycholinguistic lexicon.

Both lexicons are immutable after loading and safe to share across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import IO, Iterable

from .errors import ParseError, RatingRangeError


class EmotionCategory(enum.Enum):
    """The eight emotion categories, in canonical order.

    The declaration order is the canonical order and doubles as the
    tie-breaking order wherever a single winner must be picked.
    """

    ANGER = "anger"
    ANTICIPATION = "anticipation"
    DISGUST = "disgust"
    FEAR = "fear"
    JOY = "joy"
    SADNESS = "sadness"
    SURPRISE = "surprise"
    TRUST = "trust"

    def __lt__(self, other: "EmotionCategory") -> bool:
        order = list(EmotionCategory)
        return order.index(self) < order.index(other)


CANONICAL_ORDER: tuple[EmotionCategory, ...] = tuple(EmotionCategory)

SENTIMENTS = ("positive", "negative")

_CATEGORY_BY_NAME = {c.value: c for c in EmotionCategory}


@dataclass(frozen=True)
class EmotionLexicon:
    """Maps lowercase words to the emotion categories they are associated with.

    Every key of ``entries`` carries at least one emotion; words bearing only
    sentiment flags live in ``sentiments`` alone, and all-zero words are
    dropped at load time.
    """

    entries: dict[str, frozenset[EmotionCategory]]
    sentiments: dict[str, frozenset[str]] = field(default_factory=dict)

    @property
    def word_count(self) -> int:
        return len(self.entries.keys() | self.sentiments.keys())

    def emotions_of(self, word: str) -> frozenset[EmotionCategory]:
        """Case-insensitive lookup; unknown words map to the empty set."""
        return self.entries.get(word.lower(), frozenset())


@dataclass(frozen=True)
class PsychLexicon:
    """Maps lowercase words to (imageability, concreteness) ratings.

    Ratings live on the 100-700 psycholinguistic scale.
    """

    entries: dict[str, tuple[int, int]]

    def ratings_of(self, word: str) -> tuple[int, int] | None:
        return self.entries.get(word.lower())


def load_emotion_lexicon(source: IO[str] | Iterable[str]) -> EmotionLexicon:
    """Parse the three-column ``word<TAB>category<TAB>flag`` format.

    Duplicate (word, category) rows are resolved last-flag-wins.  Comment
    lines starting with ``#`` and blank lines are skipped.  Words whose flags
    all end up 0 are dropped.
    """
    flags: dict[str, dict[str, bool]] = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(parts)}", lineno)
        word, category, flag = parts
        word = word.strip().lower()
        if not word:
            raise ParseError("empty word field", lineno)
        if category not in _CATEGORY_BY_NAME and category not in SENTIMENTS:
            raise ParseError(f"unknown category {category!r}", lineno)
        if flag not in ("0", "1"):
            raise ParseError(f"flag must be 0 or 1, got {flag!r}", lineno)
        flags.setdefault(word, {})[category] = flag == "1"

    entries: dict[str, frozenset[EmotionCategory]] = {}
    sentiments: dict[str, frozenset[str]] = {}
    for word, per_category in flags.items():
        emo = frozenset(
            _CATEGORY_BY_NAME[c] for c, on in per_category.items() if on and c in _CATEGORY_BY_NAME
        )
        sent = frozenset(c for c, on in per_category.items() if on and c in SENTIMENTS)
        if emo:
            entries[word] = emo
        if sent:
            sentiments[word] = sent
    return EmotionLexicon(entries=entries, sentiments=sentiments)


def dump_emotion_lexicon(lex: EmotionLexicon) -> str:
    """Serialize back to the TSV format; reloading yields an equal lexicon."""
    lines = []
    for word in sorted(lex.entries.keys() | lex.sentiments.keys()):
        for cat in CANONICAL_ORDER:
            if cat in lex.entries.get(word, frozenset()):
                lines.append(f"{word}\t{cat.value}\t1")
        for sent in SENTIMENTS:
            if sent in lex.sentiments.get(word, frozenset()):
                lines.append(f"{word}\t{sent}\t1")
    return "\n".join(lines) + ("\n" if lines else "")


def load_psych_lexicon(source: IO[str] | Iterable[str]) -> PsychLexicon:
    """Parse ``word,imageability,concreteness`` CSV rows.

    An optional header line is detected and skipped.  Ratings outside
    [100, 700] are rejected.
    """
    entries: dict[str, tuple[int, int]] = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected 3 comma-separated fields, got {len(parts)}", lineno)
        word, img_s, cnc_s = (p.strip() for p in parts)
        if lineno == 1 and (word, img_s, cnc_s) == ("word", "imageability", "concreteness"):
            continue
        try:
            img, cnc = int(img_s), int(cnc_s)
        except ValueError:
            raise ParseError(f"ratings must be integers, got {img_s!r}, {cnc_s!r}", lineno)
        for value in (img, cnc):
            if not 100 <= value <= 700:
                raise RatingRangeError(
                    f"line {lineno}: rating {value} outside [100, 700] for {word!r}"
                )
        entries[word.lower()] = (img, cnc)
    return PsychLexicon(entries=entries)
