"""HTTP facade over the annotation store.

Five JSON endpoints plus optional static hosting for the browser UI. All
domain logic lives in negkit.annotation; this module only translates between
HTTP and the store, including the error-to-status mapping.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annotation import POLICIES, AnnotationStore
from .corpus import labeled_to_record
from .errors import (
    EmptyOverlap,
    IncompleteAnnotation,
    NegkitError,
    SessionError,
    UnknownInstance,
    ValidationError,
)

_STATUS = {
    SessionError: 400,
    ValidationError: 422,
    UnknownInstance: 404,
    EmptyOverlap: 409,
    IncompleteAnnotation: 409,
}


class LabelSubmission(BaseModel):
    annotator_id: str
    triple_id: str
    label: str


def create_app(store: AnnotationStore, *, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="negkit annotation service")

    @app.exception_handler(NegkitError)
    async def domain_error(request: Request, exc: NegkitError) -> JSONResponse:
        status = _STATUS.get(type(exc), 400)
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/api/tasks/next")
    def next_task(annotator: str = Query(default="")) -> dict:
        task = store.next_task(annotator)
        if task is None:
            return {"done": True, "total": len(store.benchmark)}
        return {
            "done": False,
            "triple_id": task.triple_id,
            "statement": task.statement,
            "position": task.position,
            "total": task.total,
        }

    @app.post("/api/labels")
    def submit_label(submission: LabelSubmission) -> dict:
        overwritten = store.submit(
            submission.annotator_id, submission.triple_id, submission.label
        )
        return {"ok": True, "overwritten": overwritten}

    @app.get("/api/progress")
    def progress() -> dict:
        return store.progress()

    @app.get("/api/agreement")
    def agreement(a: str = Query(default=""), b: str = Query(default="")) -> dict:
        if not a.strip() or not b.strip():
            raise SessionError("query params a and b are required")
        return store.agreement(a, b).to_dict()

    @app.get("/api/benchmark/export")
    def export(adjudicate: str = Query(default="")) -> dict:
        if not adjudicate:
            return {"triples": store.export_benchmark()}
        policy = adjudicate.strip().upper()
        if policy not in POLICIES:
            raise ValidationError(f"adjudicate must be one of {POLICIES}")
        result = store.adjudicate(policy)
        return {
            "policy": policy,
            "gold": [labeled_to_record(item) for item in result.gold],
            "disagreements": result.disagreements,
            "pending": result.pending,
        }

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app


def serve(store: AnnotationStore, *, host: str, port: int,
          ui_dir: str | Path | None = None) -> None:  # pragma: no cover
    import uvicorn

    uvicorn.run(create_app(store, ui_dir=ui_dir), host=host, port=port, log_level="info")
