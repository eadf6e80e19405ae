"""FastAPI service exposing search, zero-shot classification, piece lookup,
and health over a loaded index and checkpoint. Read-only after startup."""

from __future__ import annotations

import re

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..contrastive import ClampBundle
from ..errors import ClampError
from ..retrieval import EmbeddingIndex, search, zero_shot_classify
from .schemas import (
    ClassifyRequest,
    ClassifyResponse,
    HealthResponse,
    LabelScore,
    PieceResponse,
    SearchHit,
    SearchResponse,
)

MAX_BODY_BYTES = 1 << 20
SNIPPET_CHARS = 400


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "detail": detail}})


def _code_for(exc: ClampError) -> str:
    name = type(exc).__name__.removesuffix("Error")
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


def create_app(index: EmbeddingIndex, bundle: ClampBundle) -> FastAPI:
    app = FastAPI(title="clamp retrieval service", version=__version__)

    @app.middleware("http")
    async def limit_body_size(request: Request, call_next):
        length = request.headers.get("content-length")
        if length is not None and int(length) > MAX_BODY_BYTES:
            return _error(413, "payload_too_large", f"body exceeds {MAX_BODY_BYTES} bytes")
        return await call_next(request)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, "bad_request", str(exc.errors()[:3]))

    @app.exception_handler(ClampError)
    async def clamp_error_handler(request: Request, exc: ClampError):
        return _error(400, _code_for(exc), str(exc))

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            status="ok",
            version=__version__,
            config={
                "dim": index.dim,
                "count": index.count,
                "max_patches": bundle.config.get("max_patches"),
                "text_max_len": bundle.config.get("text_max_len"),
                "contrastive": bundle.config.get("contrastive"),
            },
        )

    @app.get("/search", response_model=SearchResponse)
    def search_route(q: str = Query(min_length=1), k: int = Query(10, ge=1)):
        result = search(index, q, k, bundle)
        hits = []
        for source_id, score in result.items:
            record = index.lookup(source_id) or {}
            abc = record.get("abc", "")
            hits.append(
                SearchHit(
                    source_id=source_id,
                    score=score,
                    title=record.get("title"),
                    snippet=abc[:SNIPPET_CHARS],
                )
            )
        return SearchResponse(query=q, k=k, results=hits)

    @app.post("/classify", response_model=ClassifyResponse)
    def classify_route(body: ClassifyRequest):
        result = zero_shot_classify(body.abc, [(lp.label, lp.prompt) for lp in body.labels], bundle)
        return ClassifyResponse(
            label=result.label,
            tie=result.tie,
            scores=[LabelScore(label=label, score=score) for label, score in result.scores],
        )

    @app.get("/piece/{source_id}", response_model=PieceResponse)
    def piece_route(source_id: str):
        record = index.lookup(source_id)
        if record is None:
            return _error(404, "not_found", f"no piece with source_id {source_id!r}")
        return PieceResponse(
            source_id=source_id,
            title=record.get("title"),
            labels=record.get("labels", {}),
            abc=record.get("abc", ""),
        )

    return app


def create_app_from_paths(index_path: str, checkpoint_path: str) -> FastAPI:
    from ..contrastive import load_clamp_checkpoint
    from ..retrieval import load_index

    return create_app(load_index(index_path), load_clamp_checkpoint(checkpoint_path))
