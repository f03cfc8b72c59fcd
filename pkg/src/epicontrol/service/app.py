"""REST surface for interactive decision sessions."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..loop.config import config_from_dict
from .sessions import SessionError, SessionStore


class StepBody(BaseModel):
    action: int | str = "recommended"


def create_app(session_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="epicontrol decision service")
    store = SessionStore(Path(session_dir) if session_dir else None)
    app.state.store = store

    @app.exception_handler(SessionError)
    async def _session_error(request: Request, exc: SessionError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: dict):
        doc = dict(body or {})
        doc.setdefault("preset", "desk")  # interactive default is desk scale
        try:
            cfg = config_from_dict(doc)
        except Exception as exc:
            raise SessionError("invalid-config", str(exc), 422)
        session = store.create(cfg)
        return session.view()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return store.get(session_id).view_locked()

    @app.post("/sessions/{session_id}/step")
    def step_session(session_id: str, body: StepBody):
        session = store.get(session_id)
        if body.action == "recommended":
            return session.step(None)
        try:
            action = int(body.action)
        except (TypeError, ValueError):
            raise SessionError("bad-action",
                               "action must be 'recommended' or an integer 1..4", 422)
        if not 1 <= action <= 4:
            raise SessionError("bad-action", f"action {action} outside 1..4", 422)
        return session.step(action)

    @app.get("/sessions/{session_id}/whatif")
    def whatif(session_id: str):
        return store.get(session_id).whatif()

    @app.get("/sessions/{session_id}/qtable")
    def qtable(session_id: str):
        return store.get(session_id).qtable()

    return app
