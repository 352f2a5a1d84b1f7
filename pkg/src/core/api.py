"""HTTP surface: REST routes, server-sent event streams, figure bytes.

Every engine error maps to one structured JSON body ``{code, message,
retriable}``; the event stream frames each session event as ``event:`` kind,
``data:`` JSON payload, ``id:`` sequence number, with a synthetic ``Gap``
event whenever a resume point has been evicted from the buffer.
"""

from __future__ import annotations

import asyncio
import json
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .errors import (
    CoreError,
    EmptyCorpus,
    FigureNotFound,
    MalformedBundle,
    StepNotFound,
    UnknownNode,
    UnknownProcedure,
    UnknownSession,
)
from .procedure import to_bundle
from .service import EngineService, QueryResult, SessionEvent

MAX_UPLOAD_BYTES = 5 * 1024 * 1024
_POLL_SECONDS = 0.05
_KEEPALIVE_SECONDS = 15.0

_NOT_FOUND = (UnknownSession, UnknownProcedure, UnknownNode, StepNotFound, FigureNotFound)


def _status_for(error: CoreError) -> int:
    if isinstance(error, _NOT_FOUND):
        return 404
    if isinstance(error, EmptyCorpus):
        return 409
    if error.retriable:
        return 503
    return 400


def _error_response(error: CoreError) -> JSONResponse:
    return JSONResponse(
        status_code=_status_for(error),
        content={"code": error.code, "message": str(error), "retriable": error.retriable},
    )


def _event_dict(event: SessionEvent) -> dict:
    return {"kind": event.kind.value, "payload": event.payload, "seq": event.seq}


def _query_response(result: QueryResult) -> dict:
    return {
        "session_id": result.session_id,
        "procedure_id": result.procedure_id,
        "reply": result.raw_reply,
        "step_number": result.reply.step_number,
        "figure_numbers": list(result.reply.figure_numbers),
        "verbatim": {
            "status": result.report.status.value,
            "expected": result.report.expected,
            "found_span": result.report.found_span,
            "first_divergence": result.report.first_divergence,
        },
        "decision": {
            "proceed": result.decision.proceed,
            "top_confidence": result.decision.top_confidence,
            "threshold": result.decision.threshold,
        },
        "events": [_event_dict(e) for e in result.events],
    }


def _sse_frame(event: SessionEvent) -> str:
    return f"id: {event.seq}\nevent: {event.kind.value}\ndata: {json.dumps(event.payload)}\n\n"


def create_app(service: EngineService, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="core-assistant", docs_url=None, redoc_url=None)

    @app.exception_handler(CoreError)
    async def _handle_core_error(_request: Request, error: CoreError) -> JSONResponse:
        return _error_response(error)

    @app.post("/api/ingest")
    async def ingest(request: Request) -> dict:
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("file")
            if upload is None or isinstance(upload, str):
                raise MalformedBundle("multipart ingest requires a 'file' part")
            raw = await upload.read()
            if len(raw) > MAX_UPLOAD_BYTES:
                raise MalformedBundle("bundle exceeds the upload size limit")
            summary = await asyncio.to_thread(service.ingest_bytes, raw)
        else:
            body = await request.json()
            path = body.get("path") if isinstance(body, dict) else None
            if not isinstance(path, str) or not path:
                raise MalformedBundle("JSON ingest requires {\"path\": \"...\"}")
            bundle_path = Path(path)
            if not bundle_path.is_file():
                raise MalformedBundle(f"no bundle file at {path}")
            summary = await asyncio.to_thread(service.ingest_path, bundle_path)
        return {
            "procedure_id": summary.procedure_id,
            "chunk_count": summary.chunk_count,
            "graph_nodes_added": summary.graph_nodes_added,
        }

    @app.get("/api/procedures")
    async def list_procedures() -> list[dict]:
        return [
            {
                "id": proc.procedure_id,
                "title": proc.title,
                "last_updated": proc.last_updated,
                "step_count": len(proc.steps),
                "figure_count": len(proc.figures),
            }
            for proc in service.procedures()
        ]

    @app.get("/api/procedures/{procedure_id}")
    async def get_procedure(procedure_id: str) -> dict:
        return to_bundle(service.procedure(procedure_id))

    @app.post("/api/sessions")
    async def create_session() -> dict:
        session = service.create_session()
        return {"session_id": session.session_id}

    @app.get("/api/sessions/{session_id}")
    async def get_session(session_id: str) -> dict:
        session = service.get_session(session_id)
        return {
            "session_id": session.session_id,
            "active_procedure": session.active_procedure,
            "last_announced_step": session.last_announced_step,
            "history_length": len(session.history),
            "created_at": session.created_at,
        }

    @app.post("/api/sessions/{session_id}/query")
    async def query(session_id: str, request: Request) -> dict:
        body = await request.json()
        text = body.get("text") if isinstance(body, dict) else None
        if not isinstance(text, str):
            raise MalformedBundle("query requires {\"text\": \"...\"}")
        result = await asyncio.to_thread(service.handle_query, session_id, text)
        return _query_response(result)

    @app.get("/api/sessions/{session_id}/events")
    async def events(session_id: str, request: Request) -> StreamingResponse:
        service.get_session(session_id)
        start_seq = _resume_seq(request)

        async def stream():
            last_seq = start_seq
            last_sent = time.monotonic()
            while True:
                if await request.is_disconnected():
                    return
                try:
                    pending, dropped = service.events_since(session_id, last_seq)
                except UnknownSession:
                    return
                if dropped:
                    yield f"event: Gap\ndata: {json.dumps({'missed': dropped})}\n\n"
                    last_sent = time.monotonic()
                for event in pending:
                    yield _sse_frame(event)
                    last_seq = event.seq
                    last_sent = time.monotonic()
                if time.monotonic() - last_sent > _KEEPALIVE_SECONDS:
                    yield ": keepalive\n\n"
                    last_sent = time.monotonic()
                await asyncio.sleep(_POLL_SECONDS)

        return StreamingResponse(
            stream(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    @app.get("/api/figures/{procedure_id}/{number}")
    async def figure(procedure_id: str, number: int) -> FileResponse:
        path = service.figure_media(procedure_id, number)
        return FileResponse(path)

    @app.get("/api/graph/{node_id}/neighbors")
    async def graph_neighbors(node_id: str) -> dict:
        nodes = service.graph.neighbors(node_id)
        return {
            "node_id": node_id,
            "neighbors": [
                {
                    "id": node.node_id,
                    "kind": node.kind.value,
                    "attributes": [[k, v] for k, v in node.attributes],
                }
                for node in nodes
            ],
        }

    if ui_dir is not None and ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _resume_seq(request: Request) -> int:
    header = request.headers.get("last-event-id")
    if header is None:
        header = request.query_params.get("last_event_id")
    if header is None:
        return 0
    try:
        return max(0, int(header))
    except ValueError:
        return 0
