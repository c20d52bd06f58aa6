#!/usr/bin/env python3
"""Independent oracle that produces tests/fixtures/metrics_golden.tsv.

Deliberately shares no code with the package: its own tokenizer, its own
syllable counter, hand-typed formulas, and an erf-based normal CDF.  The
committed golden file is what the `metrics` CLI output is compared against,
byte for byte.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "versewright" / "data"
TEXTS = ROOT / "tests" / "fixtures" / "metrics_texts"
OUT = ROOT / "tests" / "fixtures" / "metrics_golden.tsv"

STOPWORDS = set((DATA / "stopwords.txt").read_text().split())
PRONOUNS = set((DATA / "pronouns.txt").read_text().split())
COMMON = set((DATA / "common_words.txt").read_text().split())
REF = json.loads((DATA / "reference_stats.json").read_text())

PSYCH = {}
for line in (ROOT / "data" / "lexicons" / "psych_mini.csv").read_text().splitlines()[1:]:
    word, img, cnc = line.split(",")
    PSYCH[word] = (int(img), int(cnc))


def words(text: str) -> list[str]:
    raw = re.findall(r"[a-zA-Z']+", text.lower())
    return [w.strip("'") for w in raw if w.strip("'")]


def syllables(word: str) -> int:
    vowels = "aeiouy"
    count = 0
    previous = False
    for i, ch in enumerate(word):
        now = ch in vowels
        if now and (not previous or (ch == "e" and word[i - 1] == "o")):
            count += 1
        previous = now
    if count > 1 and word.endswith("e"):
        if not (len(word) >= 3 and word.endswith("le") and word[-3] not in vowels):
            count -= 1
    return max(count, 1)


def sentences(text: str) -> list[str]:
    parts = re.split(r"(?<=[.!?])\s+", text.strip())
    return [p for p in (s.strip() for s in parts) if p]


def phi(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def pct(raw: float, key: str) -> float:
    z = (raw - REF["means"][key]) / REF["stds"][key]
    return phi(z) * 100.0


def metrics_for(text: str) -> dict:
    ws = words(text)
    ss = sentences(text)
    n_words, n_sents = len(ws), max(len(ss), 1)
    n_syll = sum(syllables(w) for w in ws)

    fre = 206.835 - 1.015 * (n_words / n_sents) - 84.6 * (n_syll / n_words)
    fkgl = 0.39 * (n_words / n_sents) + 11.8 * (n_syll / n_words) - 15.59

    content = [w for w in ws if w not in STOPWORDS]
    rated = [PSYCH[w] for w in content if w in PSYCH]
    img = sum(r[0] for r in rated) / len(rated) if rated else None
    cnc = sum(r[1] for r in rated) / len(rated) if rated else None

    if len(ss) >= 2:
        overlaps = []
        for left, right in zip(ss, ss[1:]):
            a = {w for w in words(left) if w not in STOPWORDS}
            b = {w for w in words(right) if w not in STOPWORDS}
            union = a | b
            overlaps.append(len(a & b) / len(union) if union else 0.0)
        pcref = sum(overlaps) / len(overlaps)
    else:
        pcref = 0.0
    pcsyn = -sum(len(words(s)) for s in ss) / len(ss)
    narrative = sum(1 for w in ws if w in PRONOUNS or w.endswith(("ing", "ed")))
    rare = sum(1 for w in ws if w not in COMMON and w not in PRONOUNS)
    pcnar = narrative / n_words - rare / n_words

    return {
        "FRE": min(max(fre, 0.0), 100.0),
        "FKGL": min(max(fkgl, 0.0), 18.0),
        "IMGc": img,
        "CNCc": cnc,
        "LDTTRa": len(set(ws)) / n_words,
        "PCREFp": pct(pcref, "pcref"),
        "PCSYNp": pct(pcsyn, "pcsyn"),
        "PCNARp": pct(pcnar, "pcnar"),
    }


def fmt(value) -> str:
    return "" if value is None else f"{value:.4f}"


def main() -> None:
    columns = ["FRE", "FKGL", "IMGc", "CNCc", "LDTTRa", "PCREFp", "PCSYNp", "PCNARp"]
    rows = []
    for path in sorted(TEXTS.glob("*.txt")):
        rows.append((path.stem, metrics_for(path.read_text())))
    lines = ["text\t" + "\t".join(columns)]
    for name, values in rows:
        lines.append(name + "\t" + "\t".join(fmt(values[c]) for c in columns))
    means = []
    for column in columns:
        defined = [values[column] for _, values in rows if values[column] is not None]
        means.append(sum(defined) / len(defined) if defined else None)
    lines.append("MEAN\t" + "\t".join(fmt(m) for m in means))
    OUT.write_text("\n".join(lines) + "\n")
    print((OUT).read_text())


if __name__ == "__main__":
    main()
