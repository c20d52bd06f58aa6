"""HTTP + JSON API over the review store, plus static UI assets under /ui/."""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, RedirectResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..errors import ValidationError
from .store import Campaign, CampaignItem, ReviewStore, UnknownIdError, default_dimensions


class ItemSpec(BaseModel):
    id: str
    text: str
    target: str | None = None


class CampaignSpec(BaseModel):
    id: str
    kind: str
    items: list[ItemSpec]
    reviewers: list[str]
    dimensions: list[str] | None = None


class RatingBody(BaseModel):
    reviewer_id: str
    poem_id: str
    dimension: str
    likert: int


def default_ui_dir() -> Path | None:
    env = os.environ.get("VERSEWRIGHT_UI")
    if env:
        return Path(env)
    repo_dist = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    return repo_dist if repo_dist.is_dir() else None


def create_app(store: ReviewStore, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="versewright review service")

    @app.exception_handler(UnknownIdError)
    async def unknown_id(_request: Request, exc: UnknownIdError):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.exception_handler(ValidationError)
    async def invalid(_request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def bad_body(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post("/campaigns", status_code=201)
    def create_campaign(spec: CampaignSpec):
        campaign = Campaign(
            id=spec.id,
            kind=spec.kind,
            items=tuple(CampaignItem(i.id, i.text, i.target) for i in spec.items),
            dimensions=tuple(spec.dimensions or default_dimensions(spec.kind)),
            reviewers=tuple(spec.reviewers),
        )
        store.create_campaign(campaign)
        return {"id": campaign.id}

    @app.get("/campaigns/{campaign_id}")
    def campaign_meta(campaign_id: str):
        return store.campaign(campaign_id).to_dict()

    @app.get("/campaigns/{campaign_id}/next")
    def next_item(campaign_id: str, reviewer: str):
        step = store.next_item(campaign_id, reviewer)
        if step is None:
            return {"done": True}
        item, dimensions = step
        return {
            "done": False,
            "poem_id": item.id,
            "text": item.text,
            "dimensions": dimensions,
        }

    @app.post("/campaigns/{campaign_id}/ratings", status_code=204)
    def submit_rating(campaign_id: str, body: RatingBody):
        store.submit_rating(
            campaign_id=campaign_id,
            reviewer_id=body.reviewer_id,
            poem_id=body.poem_id,
            dimension=body.dimension,
            likert=body.likert,
        )
        return Response(status_code=204)

    @app.get("/campaigns/{campaign_id}/report")
    def report(campaign_id: str):
        return store.report(campaign_id)

    ui = ui_dir if ui_dir is not None else default_ui_dir()
    if ui is not None and ui.is_dir():
        app.mount("/ui", StaticFiles(directory=ui, html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def root():
            return RedirectResponse("/ui/")

    return app
