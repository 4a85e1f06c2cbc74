"""HTTP surface for the annotation protocol.

JSON errors carry the package error class name so clients can react to
AlreadyRated and friends verbatim. The annotation UI bundle, when built,
is served from the same process.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..errors import (
    AlreadyRated,
    NoRatings,
    StyleDistillError,
    UnknownItem,
    UnknownSession,
)
from .models import EvalItem, RubricDefinition, RubricLevel, default_rubric
from .store import DEFAULT_SESSION_SIZE, SessionStore

_STATUS = {
    UnknownSession: 404,
    UnknownItem: 404,
    NoRatings: 404,
    AlreadyRated: 409,
}


class ItemIn(BaseModel):
    item_id: str
    source: str
    rationale: str
    transferred: str
    task_label: str
    model_label: str


class RubricIn(BaseModel):
    version: str
    levels: list[dict]


class CreateSessionIn(BaseModel):
    items: list[ItemIn]
    annotator_id: str
    rubric: RubricIn | None = None
    # when size is given, items act as a pool and a seeded draw is taken
    size: int | None = None
    seed: int = 0


class RatingIn(BaseModel):
    item_id: str
    rate: str


def _progress(session) -> dict:
    return {"rated": len(session.ratings), "total": len(session.items)}


def build_app(store: SessionStore, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="styledistill annotation service")

    @app.exception_handler(StyleDistillError)
    async def _package_error(request: Request, exc: StyleDistillError):
        status = 422
        for cls, code in _STATUS.items():
            if isinstance(exc, cls):
                status = code
                break
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.post("/sessions")
    def create_session(body: CreateSessionIn):
        items = [EvalItem(**item.model_dump()) for item in body.items]
        rubric = None
        if body.rubric is not None:
            rubric = RubricDefinition(
                levels=tuple(RubricLevel(lv["label"], lv["criteria"]) for lv in body.rubric.levels),
                version=body.rubric.version,
            )
        if body.size is not None:
            session_id = store.draw_session(
                items, body.annotator_id, rubric, size=body.size or DEFAULT_SESSION_SIZE, seed=body.seed
            )
        else:
            session_id = store.create_session(items, body.annotator_id, rubric)
        session = store.get_session(session_id)
        return {"session_id": session_id, **_progress(session)}

    @app.get("/sessions/{session_id}")
    def session_state(session_id: str):
        session = store.get_session(session_id)
        return {
            "session_id": session.session_id,
            "annotator_id": session.annotator_id,
            "rubric_version": session.rubric_version,
            "complete": session.complete,
            **_progress(session),
        }

    @app.get("/sessions/{session_id}/next")
    def next_item(session_id: str):
        session = store.get_session(session_id)
        item = session.next_unrated()
        if item is None:
            return {"done": True, "item": None, **_progress(session)}
        return {"done": False, "item": item.to_dict(), **_progress(session)}

    @app.post("/sessions/{session_id}/ratings")
    def submit_rating(session_id: str, body: RatingIn):
        session = store.submit_rating(session_id, body.item_id, body.rate)
        return {"ok": True, **_progress(session)}

    @app.get("/summary")
    def summary(task: str | None = None, model: str | None = None):
        overall = store.summarize(task_label=task or None, model_label=model or None)
        return {**overall, "groups": store.summarize_groups()}

    @app.get("/rubric")
    def rubric():
        return default_rubric().to_dict()

    @app.get("/sessions/{session_id}/export.csv")
    def export_csv(session_id: str):
        return PlainTextResponse(store.export_csv(session_id), media_type="text/csv")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
