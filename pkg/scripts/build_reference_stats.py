#!/usr/bin/env python3
"""Recompute data/reference_stats.json from the bundled reference corpus.

Run from the repository root after editing the reference texts; the frozen
JSON is what ships, this script just documents where it came from.
"""

from __future__ import annotations

import json
import statistics
from pathlib import Path

from versewright.metrics import pcnar_raw, pcref_raw, pcsyn_raw

CORPUS = Path("src/versewright/data/reference_corpus")
OUT = Path("src/versewright/data/reference_stats.json")


def main() -> None:
    texts = [p.read_text("utf-8") for p in sorted(CORPUS.glob("*.txt"))]
    raws = {
        "pcref": [pcref_raw(t) for t in texts],
        "pcsyn": [pcsyn_raw(t) for t in texts],
        "pcnar": [pcnar_raw(t) for t in texts],
    }
    stats = {
        "means": {k: statistics.mean(v) for k, v in raws.items()},
        "stds": {k: statistics.stdev(v) for k, v in raws.items()},
        "provenance": (
            f"computed by scripts/build_reference_stats.py over the "
            f"{len(texts)} bundled reference texts in data/reference_corpus"
        ),
    }
    OUT.write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n", "utf-8")
    print(json.dumps(stats, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
