"""Byte-pair encoding over UTF-8 byte sequences.

Merges never cross pretoken-span boundaries, so a word keeps the same token
subsequence whether it is followed by punctuation or not.  Token id 256 is a
reserved document separator; merged tokens start at 257.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import ParseError, ValidationError
from .fsio import atomic_write_text, sha256_bytes

N_BYTES = 256
SEPARATOR_ID = 256
FIRST_MERGED_ID = 257


@dataclass(frozen=True)
class BpeVocab:
    """An ordered merge list plus the derived token table.

    Token ids 0-255 are the single bytes, 256 is the separator (empty byte
    sequence), and each merge appends one token whose byte sequence is the
    concatenation of its parents'.
    """

    merges: list[tuple[bytes, bytes]]
    token_table: list[bytes] = field(init=False)
    _rank: dict[tuple[bytes, bytes], int] = field(init=False, repr=False)
    _id_of: dict[bytes, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        table = [bytes([i]) for i in range(N_BYTES)]
        table.append(b"")  # separator
        id_of = {bytes([i]): i for i in range(N_BYTES)}
        rank: dict[tuple[bytes, bytes], int] = {}
        for i, (left, right) in enumerate(self.merges):
            if left not in id_of or right not in id_of:
                raise ValidationError(f"merge {i} references unknown token")
            if (left, right) in rank:
                raise ValidationError(f"duplicate merge {(left, right)!r}")
            merged = left + right
            rank[(left, right)] = i
            id_of[merged] = FIRST_MERGED_ID + i
            table.append(merged)
        object.__setattr__(self, "token_table", table)
        object.__setattr__(self, "_rank", rank)
        object.__setattr__(self, "_id_of", id_of)

    @property
    def size(self) -> int:
        return len(self.token_table)

    def content_hash(self) -> str:
        return sha256_bytes(dump_vocab(self).encode("utf-8"))


def _category(ch: str) -> str:
    if ch.isalpha():
        return "letter"
    if ch.isdigit():
        return "digit"
    if ch.isspace():
        return "space"
    return "other"


def pretokenize(text: str) -> list[bytes]:
    """Split text into UTF-8 byte spans that merges may not cross.

    Spans are maximal runs of one character category (letters, digits,
    whitespace, other); a single space immediately before a letter run is
    attached to it, so " fate" is one span and shares its word tokens with
    "fate" after punctuation.
    """
    runs: list[tuple[str, str]] = []
    for ch in text:
        cat = _category(ch)
        if runs and runs[-1][0] == cat:
            runs[-1] = (cat, runs[-1][1] + ch)
        else:
            runs.append((cat, ch))

    spans: list[str] = []
    i = 0
    while i < len(runs):
        cat, run = runs[i]
        if (
            cat == "space"
            and run.endswith(" ")
            and i + 1 < len(runs)
            and runs[i + 1][0] == "letter"
        ):
            if len(run) > 1:
                spans.append(run[:-1])
            spans.append(" " + runs[i + 1][1])
            i += 2
            continue
        spans.append(run)
        i += 1
    return [s.encode("utf-8") for s in spans]


def _merge_parts(parts: list[bytes], pair: tuple[bytes, bytes]) -> list[bytes]:
    """Merge every occurrence of pair, leftmost first, skipping overlaps."""
    out: list[bytes] = []
    i = 0
    while i < len(parts):
        if i + 1 < len(parts) and (parts[i], parts[i + 1]) == pair:
            out.append(parts[i] + parts[i + 1])
            i += 2
        else:
            out.append(parts[i])
            i += 1
    return out


def train_bpe(corpus: Iterable[str], vocab_size: int) -> BpeVocab:
    """Learn merges greedily by pair frequency within spans.

    Stops once the vocabulary reaches vocab_size tokens or no pair occurs at
    least twice.  Frequency ties break to the lexicographically smaller
    (left, right) byte-sequence pair, making training deterministic.
    """
    if vocab_size < FIRST_MERGED_ID:
        raise ValidationError(f"vocab_size must be >= {FIRST_MERGED_ID}, got {vocab_size}")

    span_counts: Counter[bytes] = Counter()
    for text in corpus:
        span_counts.update(pretokenize(text))

    splits: dict[bytes, list[bytes]] = {
        span: [bytes([b]) for b in span] for span in span_counts
    }
    merges: list[tuple[bytes, bytes]] = []
    while FIRST_MERGED_ID + len(merges) < vocab_size:
        pair_counts: Counter[tuple[bytes, bytes]] = Counter()
        for span, parts in splits.items():
            count = span_counts[span]
            for left, right in zip(parts, parts[1:]):
                pair_counts[(left, right)] += count
        if not pair_counts:
            break
        best = min(pair_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        if best[1] < 2:
            break
        pair = best[0]
        merges.append(pair)
        for span, parts in splits.items():
            if len(parts) > 1:
                splits[span] = _merge_parts(parts, pair)
    return BpeVocab(merges=merges)


def encode(vocab: BpeVocab, text: str) -> list[int]:
    """Tokenize any UTF-8 string; single bytes guarantee totality."""
    ids: list[int] = []
    for span in pretokenize(text):
        parts = [bytes([b]) for b in span]
        while len(parts) > 1:
            ranked = [
                (vocab._rank[p], p)
                for p in zip(parts, parts[1:])
                if p in vocab._rank
            ]
            if not ranked:
                break
            parts = _merge_parts(parts, min(ranked)[1])
        ids.extend(vocab._id_of[p] for p in parts)
    return ids


def decode(vocab: BpeVocab, ids: Iterable[int]) -> str:
    """Concatenate token byte sequences and decode as UTF-8 with replacement.

    Sampling can emit arbitrary byte tokens, so invalid sequences are decoded
    with U+FFFD rather than raised.
    """
    chunks: list[bytes] = []
    for token_id in ids:
        if not 0 <= token_id < len(vocab.token_table):
            raise ValidationError(f"unknown token id {token_id}")
        chunks.append(vocab.token_table[token_id])
    return b"".join(chunks).decode("utf-8", errors="replace")


def dump_vocab(vocab: BpeVocab) -> str:
    """Versioned text format: header line, then one merge per line as hex."""
    lines = [f"bpe-v1 {vocab.size}"]
    lines.extend(f"{left.hex()} {right.hex()}" for left, right in vocab.merges)
    return "\n".join(lines) + "\n"


def parse_vocab(text: str) -> BpeVocab:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty vocab file", 1)
    header = lines[0].split(" ")
    if len(header) != 2 or header[0] != "bpe-v1":
        raise ParseError(f"bad header {lines[0]!r}", 1)
    try:
        declared = int(header[1])
    except ValueError:
        raise ParseError(f"bad vocab size {header[1]!r}", 1)
    merges: list[tuple[bytes, bytes]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(" ")
        if len(parts) != 2:
            raise ParseError("expected two hex fields", lineno)
        try:
            merges.append((bytes.fromhex(parts[0]), bytes.fromhex(parts[1])))
        except ValueError:
            raise ParseError(f"invalid hex in {line!r}", lineno)
    try:
        vocab = BpeVocab(merges=merges)
    except ValidationError as exc:
        raise ParseError(f"inconsistent merge list: {exc}", 1) from exc
    if vocab.size != declared:
        raise ParseError(f"header declares {declared} tokens, merges yield {vocab.size}", 1)
    return vocab


def save_vocab(vocab: BpeVocab, path: str | Path) -> None:
    atomic_write_text(path, dump_vocab(vocab))


def load_vocab(path: str | Path) -> BpeVocab:
    return parse_vocab(Path(path).read_text(encoding="utf-8"))
