"""Request/response models for the analysis service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class AnalyzeRequest(BaseModel):
    source: str
    mt: str
    id: Optional[str] = Field(
        default=None,
        description="Sentence id for adapter-backed bundles; defaults to a "
                    "content hash so analysis stays stateless.")


class WordLink(BaseModel):
    src: int
    mt: int
    fwd_prob: float
    bwd_prob: float
    mean_prob: float


class GapLink(BaseModel):
    src: int
    gap: int
    prob: float


class Probabilities(BaseModel):
    source: list[float]
    mt: list[float]


class Tokens(BaseModel):
    source: list[str]
    mt: list[str]


class AnalyzeResponse(BaseModel):
    id: str
    tokens: Tokens
    source_tags: list[str]
    mt_word_tags: list[str]
    gap_tags: list[str]
    word_links: list[WordLink]
    gap_links: list[GapLink]
    probabilities: Probabilities
    threshold: float


class EditRequest(BaseModel):
    op: str  # REP | INS | DEL
    mt: Optional[str] = None  # required unless session_id names a session
    session_id: Optional[str] = None
    mt_index: Optional[int] = None
    gap_index: Optional[int] = None
    payload: Optional[str] = None


class EditResponse(BaseModel):
    session_id: str
    mt: str
    tokens: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str
