"""Query orchestration, session state, ingest, and durable storage.

One :class:`EngineService` owns the procedure store, knowledge graph, and
retrieval corpus.  Sessions are in-memory and ephemeral; procedures, graph,
and index files under the data directory are the durable state and reload
on restart.
"""

from __future__ import annotations

import json
import secrets
import shutil
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .backends import ChatMessage, Role
from .errors import EmptyCorpus, EmptyQuery, FigureNotFound, UnknownProcedure, UnknownSession
from .graph import KnowledgeGraph, linked_info_block, upsert_procedure
from .procedure import (
    Procedure,
    load_procedure,
    parse_procedure_bundle,
    render_procedure_text,
    render_step_text,
    to_bundle,
)
from .prompts import PromptBundle, assemble_user_prompt
from .reply import (
    REFUSAL_TEXT,
    TOPICALITY_THRESHOLD,
    ParsedReply,
    TopicalityDecision,
    VerbatimReport,
    VerbatimStatus,
    parse_markers,
    topicality_gate,
    verify_verbatim,
)
from .retrieval import IndexedCorpus, build_corpus, chunk_procedure, hybrid_retrieve, save_index

RETRIEVAL_K = 5
EVENT_BUFFER_SIZE = 256


class EventKind(str, Enum):
    STEP_DISPLAYED = "StepDisplayed"
    SHOW_FIGURE = "ShowFigure"
    CONFIDENCE_UPDATE = "ConfidenceUpdate"
    REFUSAL = "Refusal"
    VERBATIM_WARNING = "VerbatimWarning"


@dataclass(frozen=True)
class SessionEvent:
    kind: EventKind
    payload: dict
    seq: int


@dataclass(frozen=True)
class HistoryEntry:
    query: str
    reply: ParsedReply
    report: VerbatimReport
    decision: TopicalityDecision
    prompt: PromptBundle | None


@dataclass
class Session:
    session_id: str
    created_at: float
    active_procedure: str | None = None
    last_announced_step: int | None = None
    history: list[HistoryEntry] = field(default_factory=list)
    events: deque = field(default_factory=lambda: deque(maxlen=EVENT_BUFFER_SIZE))
    next_seq: int = 1
    lock: threading.Lock = field(default_factory=threading.Lock)

    def emit(self, kind: EventKind, payload: dict) -> SessionEvent:
        event = SessionEvent(kind=kind, payload=payload, seq=self.next_seq)
        self.next_seq += 1
        self.events.append(event)
        return event


@dataclass(frozen=True)
class IngestSummary:
    procedure_id: str
    chunk_count: int
    graph_nodes_added: int


@dataclass(frozen=True)
class QueryResult:
    session_id: str
    procedure_id: str | None
    raw_reply: str
    reply: ParsedReply
    report: VerbatimReport
    decision: TopicalityDecision
    events: list[SessionEvent]
    prompt: PromptBundle | None


class EngineService:
    """Owns durable state and serves sessions; safe for concurrent use."""

    def __init__(self, data_dir: Path, backend, threshold: float = TOPICALITY_THRESHOLD):
        self._data_dir = data_dir
        self._backend = backend
        self._threshold = threshold
        self._write_lock = threading.Lock()
        self._sessions_lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._procedures: dict[str, Procedure] = {}
        self._graph = KnowledgeGraph()
        self._corpus: IndexedCorpus | None = None
        self._load()

    # --- durable state ---

    @property
    def data_dir(self) -> Path:
        return self._data_dir

    @property
    def backend(self):
        return self._backend

    @property
    def graph(self) -> KnowledgeGraph:
        return self._graph

    @property
    def corpus(self) -> IndexedCorpus | None:
        return self._corpus

    def _procedures_dir(self) -> Path:
        return self._data_dir / "procedures"

    def _media_dir(self, procedure_id: str) -> Path:
        return self._data_dir / "media" / procedure_id

    def _load(self) -> None:
        self._data_dir.mkdir(parents=True, exist_ok=True)
        proc_dir = self._procedures_dir()
        if proc_dir.is_dir():
            for path in sorted(proc_dir.glob("*.json")):
                proc = load_procedure(path)
                self._procedures[proc.procedure_id] = proc
        graph_path = self._data_dir / "graph.jsonl"
        if graph_path.is_file():
            self._graph = KnowledgeGraph.load(graph_path)
        else:
            for proc in self._procedures.values():
                upsert_procedure(self._graph, proc)
        if self._procedures:
            self._corpus = build_corpus(list(self._procedures.values()))

    def _persist(self) -> None:
        self._graph.save(self._data_dir / "graph.jsonl")
        if self._corpus is not None:
            save_index(self._corpus, self._data_dir / "index.json")

    def ingest_path(self, bundle_path: Path) -> IngestSummary:
        """Ingest a bundle file, copying referenced media into the data dir."""
        proc = load_procedure(bundle_path)
        return self._ingest(proc, media_source=bundle_path.parent)

    def ingest_bytes(self, raw: bytes) -> IngestSummary:
        """Ingest an uploaded bundle; media files are expected separately."""
        proc = parse_procedure_bundle(raw)
        return self._ingest(proc, media_source=None)

    def _ingest(self, proc: Procedure, media_source: Path | None) -> IngestSummary:
        with self._write_lock:
            proc_dir = self._procedures_dir()
            proc_dir.mkdir(parents=True, exist_ok=True)
            out = proc_dir / f"{proc.procedure_id}.json"
            tmp = out.with_suffix(".json.tmp")
            tmp.write_text(
                json.dumps(to_bundle(proc), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
            )
            tmp.replace(out)

            if media_source is not None:
                for fig in proc.figures:
                    src = media_source / fig.media
                    if src.is_file():
                        dst = self._media_dir(proc.procedure_id) / fig.media
                        dst.parent.mkdir(parents=True, exist_ok=True)
                        shutil.copyfile(src, dst)

            self._procedures[proc.procedure_id] = proc
            projection = upsert_procedure(self._graph, proc)
            corpus = build_corpus(list(self._procedures.values()))
            self._corpus = corpus
            self._persist()

        return IngestSummary(
            procedure_id=proc.procedure_id,
            chunk_count=len(chunk_procedure(proc)),
            graph_nodes_added=projection.nodes_touched,
        )

    # --- procedure access ---

    def procedures(self) -> list[Procedure]:
        return sorted(self._procedures.values(), key=lambda p: p.procedure_id)

    def procedure(self, procedure_id: str) -> Procedure:
        try:
            return self._procedures[procedure_id]
        except KeyError:
            raise UnknownProcedure(procedure_id) from None

    def figure_media(self, procedure_id: str, number: int) -> Path:
        proc = self.procedure(procedure_id)
        fig = proc.figure(number)
        if fig is None:
            raise FigureNotFound(procedure_id, number)
        path = self._media_dir(procedure_id) / fig.media
        if not path.is_file():
            raise FigureNotFound(procedure_id, number)
        return path

    # --- sessions ---

    def create_session(self) -> Session:
        session = Session(session_id=secrets.token_hex(16), created_at=time.time())
        with self._sessions_lock:
            self._sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> Session:
        with self._sessions_lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSession(session_id) from None

    def events_since(self, session_id: str, last_seq: int) -> tuple[list[SessionEvent], int]:
        """Buffered events after ``last_seq`` plus how many were dropped."""
        session = self.get_session(session_id)
        with session.lock:
            pending = [e for e in session.events if e.seq > last_seq]
        if pending and pending[0].seq > last_seq + 1:
            return pending, pending[0].seq - last_seq - 1
        return pending, 0

    # --- query pipeline ---

    def handle_query(self, session_id: str, text: str) -> QueryResult:
        session = self.get_session(session_id)
        with session.lock:
            return self._handle_query_locked(session, text)

    def _handle_query_locked(self, session: Session, text: str) -> QueryResult:
        query = text.strip()
        if not query:
            raise EmptyQuery("query text is empty")
        corpus = self._corpus
        if corpus is None or len(corpus) == 0:
            raise EmptyCorpus("no procedures ingested")

        results = hybrid_retrieve(corpus, query, k=RETRIEVAL_K)
        decision = topicality_gate(results, self._threshold)
        confidence_payload = {
            "results": [
                {"chunk_id": r.chunk.chunk_id, "confidence": r.confidence} for r in results
            ]
        }

        if not decision.proceed:
            reply = parse_markers(REFUSAL_TEXT)
            report = VerbatimReport(status=VerbatimStatus.NOT_APPLICABLE, expected="")
            events = [
                session.emit(EventKind.REFUSAL, {"text": REFUSAL_TEXT}),
                session.emit(EventKind.CONFIDENCE_UPDATE, confidence_payload),
            ]
            session.history.append(
                HistoryEntry(query=query, reply=reply, report=report, decision=decision, prompt=None)
            )
            return QueryResult(
                session_id=session.session_id,
                procedure_id=None,
                raw_reply=REFUSAL_TEXT,
                reply=reply,
                report=report,
                decision=decision,
                events=events,
                prompt=None,
            )

        procedure_id = results[0].chunk.procedure_id
        proc = self._procedures[procedure_id]
        graph_info = linked_info_block(self._graph, procedure_id)

        prompt_query = query
        if session.last_announced_step is not None and session.active_procedure == procedure_id:
            prompt_query = f"{query}\nCurrent step: {session.last_announced_step}"

        prompt = assemble_user_prompt(
            prompt_query,
            render_procedure_text(proc),
            graph_info,
            procedure_id=procedure_id,
            chunk_ids=tuple(r.chunk.chunk_id for r in results),
        )
        raw_reply = self._backend.complete(
            [
                ChatMessage(role=Role.SYSTEM, content=prompt.system),
                ChatMessage(role=Role.USER, content=prompt.user),
            ]
        )

        reply = parse_markers(raw_reply)
        report = verify_verbatim(reply, proc)

        events: list[SessionEvent] = []
        if report.status is VerbatimStatus.PASS and reply.step_number is not None:
            step = proc.lookup_step(reply.step_number)
            events.append(
                session.emit(
                    EventKind.STEP_DISPLAYED,
                    {"number": step.number, "text": render_step_text(step)},
                )
            )
            for number in reply.figure_numbers:
                fig = proc.figure(number)
                if fig is None:
                    continue
                events.append(
                    session.emit(
                        EventKind.SHOW_FIGURE,
                        {
                            "number": number,
                            "media_path": fig.media,
                            "media_url": f"/api/figures/{procedure_id}/{number}",
                            "caption": fig.caption,
                        },
                    )
                )
            session.active_procedure = procedure_id
            session.last_announced_step = step.number
        elif report.status is VerbatimStatus.FAIL:
            events.append(
                session.emit(
                    EventKind.VERBATIM_WARNING,
                    {
                        "step_number": reply.step_number,
                        "expected": report.expected,
                        "first_divergence": report.first_divergence,
                    },
                )
            )
        events.append(session.emit(EventKind.CONFIDENCE_UPDATE, confidence_payload))

        session.history.append(
            HistoryEntry(query=query, reply=reply, report=report, decision=decision, prompt=prompt)
        )
        return QueryResult(
            session_id=session.session_id,
            procedure_id=procedure_id,
            raw_reply=raw_reply,
            reply=reply,
            report=report,
            decision=decision,
            events=events,
            prompt=prompt,
        )
