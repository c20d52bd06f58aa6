"""Append-only event log with an in-memory materialized view.

Every mutation is one JSON line; replaying the log from empty reproduces the
exact view, which is how the service recovers after a restart.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..emotion_lexicon import EmotionCategory
from ..errors import ValidationError

LOG_SCHEMA_VERSION = 1

EMOTION_DIMENSIONS = tuple(c.value for c in EmotionCategory)
DREAM_DIMENSIONS = ("quality1", "quality2", "quality3")


class UnknownIdError(ValidationError):
    """Lookup of a campaign or other addressable entity that does not exist."""


@dataclass(frozen=True)
class CampaignItem:
    id: str
    text: str
    target: str | None = None

    def to_dict(self) -> dict:
        return {"id": self.id, "text": self.text, "target": self.target}


@dataclass(frozen=True)
class Campaign:
    id: str
    kind: str  # "emotion" | "dream"
    items: tuple[CampaignItem, ...]
    dimensions: tuple[str, ...]
    reviewers: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "items": [item.to_dict() for item in self.items],
            "dimensions": list(self.dimensions),
            "reviewers": list(self.reviewers),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Campaign":
        return cls(
            id=data["id"],
            kind=data["kind"],
            items=tuple(CampaignItem(**item) for item in data["items"]),
            dimensions=tuple(data["dimensions"]),
            reviewers=tuple(data["reviewers"]),
        )


@dataclass(frozen=True)
class RatingRecord:
    campaign_id: str
    reviewer_id: str
    poem_id: str
    dimension: str
    likert: int
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "reviewer_id": self.reviewer_id,
            "poem_id": self.poem_id,
            "dimension": self.dimension,
            "likert": self.likert,
            "timestamp": self.timestamp,
        }


def validate_campaign(campaign: Campaign) -> None:
    if campaign.kind not in ("emotion", "dream"):
        raise ValidationError(f"unknown campaign kind {campaign.kind!r}")
    if not campaign.id:
        raise ValidationError("campaign id must be non-empty")
    if not campaign.items:
        raise ValidationError("campaign needs at least one item")
    if not campaign.reviewers:
        raise ValidationError("campaign needs at least one reviewer")
    if not campaign.dimensions:
        raise ValidationError("campaign needs at least one dimension")
    ids = [item.id for item in campaign.items]
    if len(set(ids)) != len(ids):
        raise ValidationError("item ids must be unique")
    if campaign.kind == "emotion":
        for item in campaign.items:
            if item.target not in EMOTION_DIMENSIONS:
                raise ValidationError(
                    f"item {item.id!r} needs a valid target emotion, got {item.target!r}"
                )


def default_dimensions(kind: str) -> tuple[str, ...]:
    return EMOTION_DIMENSIONS if kind == "emotion" else DREAM_DIMENSIONS


@dataclass
class ReviewStore:
    """Durable campaign and rating storage behind a single-writer lock."""

    log_path: Path
    fsync: bool = True
    campaigns: dict[str, Campaign] = field(default_factory=dict)
    # campaign id -> (reviewer, poem, dimension) -> RatingRecord; latest wins
    ratings: dict[str, dict[tuple[str, str, str], RatingRecord]] = field(
        default_factory=dict
    )
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self) -> None:
        self.log_path = Path(self.log_path)
        if self.log_path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self.log_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event.get("v") != LOG_SCHEMA_VERSION:
                    raise ValidationError(
                        f"{self.log_path}:{lineno}: unsupported event version"
                    )
                self._apply(event)

    def _apply(self, event: dict) -> None:
        if event["type"] == "campaign_created":
            campaign = Campaign.from_dict(event["campaign"])
            self.campaigns[campaign.id] = campaign
            self.ratings.setdefault(campaign.id, {})
        elif event["type"] == "rating_submitted":
            record = RatingRecord(**event["rating"])
            key = (record.reviewer_id, record.poem_id, record.dimension)
            self.ratings[record.campaign_id][key] = record
        else:
            raise ValidationError(f"unknown event type {event['type']!r}")

    def _append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True, separators=(",", ":"))
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            if self.fsync:
                os.fsync(fh.fileno())

    def create_campaign(self, campaign: Campaign) -> Campaign:
        validate_campaign(campaign)
        with self._lock:
            if campaign.id in self.campaigns:
                raise ValidationError(f"duplicate campaign id {campaign.id!r}")
            event = {
                "v": LOG_SCHEMA_VERSION,
                "type": "campaign_created",
                "campaign": campaign.to_dict(),
            }
            self._append(event)
            self._apply(event)
        return campaign

    def campaign(self, campaign_id: str) -> Campaign:
        try:
            return self.campaigns[campaign_id]
        except KeyError:
            raise UnknownIdError(f"no campaign {campaign_id!r}") from None

    def next_item(
        self, campaign_id: str, reviewer_id: str
    ) -> tuple[CampaignItem, list[str]] | None:
        """Lowest-indexed item with unanswered dimensions for this reviewer."""
        campaign = self.campaign(campaign_id)
        if reviewer_id not in campaign.reviewers:
            raise ValidationError(f"reviewer {reviewer_id!r} is not on the roster")
        answered = self.ratings.get(campaign_id, {})
        for item in campaign.items:
            unanswered = [
                dim
                for dim in campaign.dimensions
                if (reviewer_id, item.id, dim) not in answered
            ]
            if unanswered:
                return item, unanswered
        return None

    def submit_rating(
        self,
        campaign_id: str,
        reviewer_id: str,
        poem_id: str,
        dimension: str,
        likert: int,
        timestamp: float | None = None,
    ) -> RatingRecord:
        campaign = self.campaign(campaign_id)
        if reviewer_id not in campaign.reviewers:
            raise ValidationError(f"reviewer {reviewer_id!r} is not on the roster")
        if poem_id not in {item.id for item in campaign.items}:
            raise ValidationError(f"no poem {poem_id!r} in campaign")
        if dimension not in campaign.dimensions:
            raise ValidationError(f"no dimension {dimension!r} in campaign")
        if not isinstance(likert, int) or isinstance(likert, bool) or not 1 <= likert <= 5:
            raise ValidationError(f"likert must be an integer in 1..5, got {likert!r}")
        record = RatingRecord(
            campaign_id=campaign_id,
            reviewer_id=reviewer_id,
            poem_id=poem_id,
            dimension=dimension,
            likert=likert,
            timestamp=time.time() if timestamp is None else timestamp,
        )
        with self._lock:
            event = {
                "v": LOG_SCHEMA_VERSION,
                "type": "rating_submitted",
                "rating": record.to_dict(),
            }
            self._append(event)
            self._apply(event)
        return record

    def elicitation_report(self, campaign_id: str) -> dict:
        """Table-1-style report: percent of likert >= 4 on the target dimension,
        per poem, then averaged over each emotion's poems."""
        campaign = self.campaign(campaign_id)
        if campaign.kind != "emotion":
            raise ValidationError("elicitation report needs an emotion campaign")
        ratings = self.ratings.get(campaign_id, {})
        per_poem = []
        poem_percent: dict[str, float | None] = {}
        for item in campaign.items:
            judgments = [
                record.likert
                for (reviewer, poem, dim), record in ratings.items()
                if poem == item.id and dim == item.target
            ]
            percent = (
                100.0 * sum(1 for j in judgments if j >= 4) / len(judgments)
                if judgments
                else None
            )
            poem_percent[item.id] = percent
            per_poem.append(
                {
                    "poem_id": item.id,
                    "target": item.target,
                    "percent": percent,
                    "raters": len(judgments),
                }
            )
        per_emotion: dict[str, float | None] = {}
        targets = sorted({item.target for item in campaign.items})
        for emotion in targets:
            values = [
                poem_percent[item.id]
                for item in campaign.items
                if item.target == emotion and poem_percent[item.id] is not None
            ]
            per_emotion[emotion] = sum(values) / len(values) if values else None
        return {
            "kind": "emotion",
            "campaign_id": campaign_id,
            "per_emotion": per_emotion,
            "per_poem": per_poem,
        }

    def quality_report(self, campaign_id: str) -> dict:
        """Table-2-style report: mean likert per (poem, quality dimension)."""
        campaign = self.campaign(campaign_id)
        if campaign.kind != "dream":
            raise ValidationError("quality report needs a dream campaign")
        ratings = self.ratings.get(campaign_id, {})
        per_poem: dict[str, dict[str, float | None]] = {}
        for item in campaign.items:
            cells: dict[str, float | None] = {}
            for dimension in campaign.dimensions:
                scores = [
                    record.likert
                    for (reviewer, poem, dim), record in ratings.items()
                    if poem == item.id and dim == dimension
                ]
                cells[dimension] = sum(scores) / len(scores) if scores else None
            per_poem[item.id] = cells
        return {
            "kind": "dream",
            "campaign_id": campaign_id,
            "dimensions": list(campaign.dimensions),
            "per_poem": per_poem,
        }

    def report(self, campaign_id: str) -> dict:
        campaign = self.campaign(campaign_id)
        if campaign.kind == "emotion":
            return self.elicitation_report(campaign_id)
        return self.quality_report(campaign_id)
