"""HTTP scoring service.

Exposes the clip-scoring pipeline over four routes: POST /api/score
(multipart WAV upload), GET /api/profile, GET /api/pianos, and
GET /api/health.  Model and profile are loaded once at startup and never
mutated; every non-2xx response is a JSON {error, detail} envelope.
"""

from __future__ import annotations

import json
import os
import tempfile

from fastapi import FastAPI, File, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from starlette.exceptions import HTTPException as StarletteHTTPException

from .audio import load_wav
from .checkpoint import load_model, model_id
from .errors import InputError, TooShort
from .labels import PIANO_LABELS
from .predict import score_clip
from .scoring import load_profile, score_response_json

MAX_UPLOAD_BYTES = 32 * 1024 * 1024

_REASONS = {
    400: "malformed upload",
    404: "not found",
    405: "method not allowed",
    413: "payload too large",
    422: "clip too short",
    500: "internal error",
    503: "service unavailable",
}


class _ServiceState:
    """Artifacts shared by all requests; written once by load()."""

    def __init__(self, model_path, profile_path):
        self.model_path = model_path
        self.profile_path = profile_path
        self.model = None
        self.profile = None
        self.model_id = None

    @property
    def ready(self) -> bool:
        return self.model is not None and self.profile is not None

    def load(self) -> None:
        model = load_model(self.model_path)
        self.profile = load_profile(self.profile_path)
        self.model = model
        self.model_id = model_id(model)


def _envelope(status: int, detail: str) -> JSONResponse:
    reason = _REASONS.get(status, "error")
    return JSONResponse({"error": reason, "detail": detail}, status_code=status)


def _decode_wav_bytes(data: bytes):
    """Run the WAV decoder over an in-memory upload."""
    fd, path = tempfile.mkstemp(suffix=".wav")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        return load_wav(path)
    finally:
        os.unlink(path)


def create_app(
    model_path,
    profile_path,
    dev_cors: bool = False,
    defer_load: bool = False,
) -> FastAPI:
    """Build the service around one model checkpoint and one profile.

    With defer_load the artifacts stay unloaded until
    app.state.load_artifacts() runs; readiness-sensitive routes answer
    503 in the meantime.
    """
    app = FastAPI(openapi_url=None, docs_url=None, redoc_url=None)
    state = _ServiceState(model_path, profile_path)
    app.state.pianoq = state
    app.state.load_artifacts = state.load
    if not defer_load:
        state.load()

    if dev_cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(StarletteHTTPException)
    async def _on_http_error(request: Request, exc: StarletteHTTPException):
        return _envelope(exc.status_code, str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def _on_validation_error(request: Request, exc: RequestValidationError):
        return _envelope(400, "request does not match the multipart upload contract")

    @app.exception_handler(Exception)
    async def _on_internal_error(request: Request, exc: Exception):
        return _envelope(500, f"{type(exc).__name__}: {exc}")

    @app.get("/api/health")
    async def health():
        if not state.ready:
            return _envelope(503, "model not loaded yet")
        return JSONResponse({"status": "ok", "model_id": state.model_id})

    @app.get("/api/pianos")
    async def pianos():
        return JSONResponse(list(PIANO_LABELS))

    @app.get("/api/profile")
    async def profile():
        if not state.ready:
            return _envelope(503, "profile not loaded yet")
        body = json.dumps(state.profile.to_json_dict(), separators=(",", ":"))
        return Response(content=body, media_type="application/json")

    @app.post("/api/score")
    async def score(request: Request, file: UploadFile = File(...)):
        length = request.headers.get("content-length", "")
        if length.isdigit() and int(length) > MAX_UPLOAD_BYTES:
            return _envelope(413, f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        data = await file.read()
        if len(data) > MAX_UPLOAD_BYTES:
            return _envelope(413, f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        if not state.ready:
            return _envelope(503, "model not loaded yet")
        try:
            clip = _decode_wav_bytes(data)
        except InputError as exc:
            return _envelope(400, str(exc))
        try:
            report = score_clip(state.model, clip, state.profile)
        except TooShort as exc:
            return _envelope(422, str(exc))
        body = score_response_json(report, state.model_id)
        return Response(content=body, media_type="application/json")

    return app
