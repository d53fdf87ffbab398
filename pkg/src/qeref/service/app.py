"""The analysis service: stateless per-sentence analysis plus a small
in-memory editing session map.

Error contract: 400 for malformed request bodies, 422 for empty
sentences, 500 (with the failing stage named) for analysis errors.
"""

from __future__ import annotations

import hashlib
import itertools
import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .. import __version__
from ..core import QERefError, SentencePair
from ..pipeline import ModelBundle, StageError, analyze_pair
from .schemas import (
    AnalyzeRequest,
    AnalyzeResponse,
    EditRequest,
    EditResponse,
    GapLink,
    HealthResponse,
    Probabilities,
    Tokens,
    WordLink,
)


def apply_edit_op(tokens: list[str], op: str, mt_index=None, gap_index=None,
                  payload=None) -> list[str]:
    """One REP/INS/DEL operation on a working token list; pure."""
    out = list(tokens)
    if op == "REP":
        if mt_index is None or not 0 <= mt_index < len(out):
            raise QERefError(f"REP needs a word index in 0..{len(out) - 1}")
        if not payload:
            raise QERefError("REP needs replacement text")
        out[mt_index:mt_index + 1] = payload.split()
    elif op == "DEL":
        if mt_index is None or not 0 <= mt_index < len(out):
            raise QERefError(f"DEL needs a word index in 0..{len(out) - 1}")
        del out[mt_index]
    elif op == "INS":
        if gap_index is None or not 0 <= gap_index <= len(out):
            raise QERefError(f"INS needs a gap index in 0..{len(out)}")
        if not payload:
            raise QERefError("INS needs insertion text")
        out[gap_index:gap_index] = payload.split()
    else:
        raise QERefError(f"unknown edit op {op!r}")
    return out


def create_app(bundle: ModelBundle) -> FastAPI:
    app = FastAPI(title="qeref analysis service", version=__version__)
    # the workbench is served as static files from another origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    sessions: dict[str, list[str]] = {}
    session_counter = itertools.count(1)
    lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"detail": "malformed request body",
                                     "errors": exc.errors()})

    @app.get("/api/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/api/analyze", response_model=AnalyzeResponse)
    def analyze(req: AnalyzeRequest):
        source = req.source.split()
        mt = req.mt.split()
        if not source or not mt:
            return JSONResponse(status_code=422,
                                content={"detail": "source and mt must be non-empty"})
        sid = req.id or hashlib.sha256(
            ("\x1f".join(source) + "\x1e" + "\x1f".join(mt)).encode()).hexdigest()[:16]
        try:
            pair = SentencePair(source, mt, id=sid)
            analysis = analyze_pair(pair, bundle)
        except StageError as exc:
            return JSONResponse(status_code=500,
                                content={"detail": str(exc.cause), "stage": exc.stage})
        except Exception as exc:  # noqa: BLE001 - surfaced with stage name
            return JSONResponse(status_code=500,
                                content={"detail": str(exc), "stage": "analyze"})
        return AnalyzeResponse(
            id=sid,
            tokens=Tokens(source=list(pair.source), mt=list(pair.mt)),
            source_tags=[t.value for t in analysis.refined.source_tags],
            mt_word_tags=[t.value for t in analysis.refined.mt_word_tags],
            gap_tags=[t.value for t in analysis.refined.gap_tags],
            word_links=[WordLink(src=l.src_index, mt=l.mt_index,
                                 fwd_prob=l.fwd_prob, bwd_prob=l.bwd_prob,
                                 mean_prob=l.mean_prob)
                        for l in sorted(analysis.word_links)],
            gap_links=[GapLink(src=l.src_index, gap=l.gap_index, prob=l.prob)
                       for l in sorted(analysis.gap_links)],
            probabilities=Probabilities(source=list(analysis.probs.source_probs),
                                        mt=list(analysis.probs.mt_word_probs)),
            threshold=bundle.tau,
        )

    @app.post("/api/edit", response_model=EditResponse)
    def edit(req: EditRequest):
        with lock:
            if req.session_id and req.session_id in sessions:
                tokens = sessions[req.session_id]
                sid = req.session_id
            elif req.mt is not None and req.mt.split():
                tokens = req.mt.split()
                sid = req.session_id or f"edit-{next(session_counter)}"
            else:
                return JSONResponse(
                    status_code=422,
                    content={"detail": "need a non-empty mt or a known session_id"})
            try:
                updated = apply_edit_op(tokens, req.op, req.mt_index,
                                        req.gap_index, req.payload)
            except QERefError as exc:
                return JSONResponse(status_code=422, content={"detail": str(exc)})
            sessions[sid] = updated
        return EditResponse(session_id=sid, mt=" ".join(updated), tokens=updated)

    return app
