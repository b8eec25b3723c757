"""HTTP/JSON surface of the experiment service.

Participant endpoints never expose conditions or ground truths; the admin
endpoints require the token configured at startup (X-Admin-Token header).
Errors are JSON {code, message} with 401/404/409/412 status codes.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Header, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .builder import ExperimentConfig, build_experiment
from .core import ApiError, ExperimentService
from .store import Store


def create_app(data_dir: str | Path, admin_token: str, static_dir: str | Path | None = None) -> FastAPI:
    store = Store(data_dir)
    service = ExperimentService(store, admin_token)
    app = FastAPI(title="mcvlab experiment service")
    app.state.service = service
    # The web UI may be served from a separate static host.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Recording-Id"],
    )

    @app.exception_handler(ApiError)
    def api_error_handler(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/experiments", status_code=201)
    def create_experiment(config: dict, x_admin_token: str | None = Header(default=None)):
        service.check_admin(x_admin_token)
        manifest = build_experiment(ExperimentConfig.from_dict(config), store)
        return {"experiment_id": manifest.id, "n_recordings": len(manifest.recordings)}

    @app.get("/api/experiments/{experiment_id}")
    def experiment_meta(experiment_id: str):
        return service.experiment_meta(experiment_id)

    @app.post("/api/experiments/{experiment_id}/sessions", status_code=201)
    def create_session(experiment_id: str):
        session = service.create_session(experiment_id)
        return {"session_id": session.id, "total": session.total}

    @app.get("/api/sessions/{session_id}")
    def session_progress(session_id: str):
        return service.progress(session_id)

    @app.post("/api/sessions/{session_id}/consent")
    def consent(session_id: str):
        return service.give_consent(session_id)

    @app.post("/api/sessions/{session_id}/demographics")
    def demographics(session_id: str, fields: dict):
        return service.submit_demographics(session_id, fields)

    @app.get("/api/sessions/{session_id}/recordings/{position}/audio")
    def audio(session_id: str, position: int):
        data, recording_id = service.fetch_audio(session_id, position)
        return Response(
            content=data,
            media_type="audio/wav",
            headers={"X-Recording-Id": recording_id, "Cache-Control": "no-store"},
        )

    @app.post("/api/sessions/{session_id}/recordings/{position}/answer", status_code=201)
    def answer(session_id: str, position: int, body: dict):
        record = service.submit_answer(session_id, position, str(body.get("text", "")))
        return record.to_dict()

    @app.get("/api/experiments/{experiment_id}/results")
    def results(experiment_id: str, x_admin_token: str | None = Header(default=None)):
        return service.export_results(experiment_id, x_admin_token)

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
