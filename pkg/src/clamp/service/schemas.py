"""Pydantic request/response models for the retrieval service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class SearchHit(BaseModel):
    source_id: str
    score: float
    title: Optional[str] = None
    snippet: str


class SearchResponse(BaseModel):
    query: str
    k: int
    results: list[SearchHit]


class LabelPrompt(BaseModel):
    label: str = Field(min_length=1)
    prompt: str = Field(min_length=1)


class ClassifyRequest(BaseModel):
    abc: str = Field(min_length=1)
    labels: list[LabelPrompt] = Field(min_length=2)


class LabelScore(BaseModel):
    label: str
    score: float


class ClassifyResponse(BaseModel):
    label: str
    tie: bool
    scores: list[LabelScore]


class PieceResponse(BaseModel):
    source_id: str
    title: Optional[str] = None
    labels: dict[str, str] = {}
    abc: str


class HealthResponse(BaseModel):
    status: str
    version: str
    config: dict


class ErrorDetail(BaseModel):
    code: str
    detail: str


class ErrorResponse(BaseModel):
    error: ErrorDetail
