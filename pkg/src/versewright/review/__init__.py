"""Human-evaluation campaigns: storage, aggregation, and HTTP API."""

from .store import Campaign, CampaignItem, RatingRecord, ReviewStore, UnknownIdError
from .app import create_app

__all__ = [
    "Campaign",
    "CampaignItem",
    "RatingRecord",
    "ReviewStore",
    "UnknownIdError",
    "create_app",
]
