"""Offline procedure-checklist assistant engine.

Hybrid retrieval over checklist procedures, a knowledge graph for linked
metadata and figures, fixed prompt templates, pluggable chat-completion
backends, and strict verbatim verification of step replies.
"""

from .api import MAX_UPLOAD_BYTES, create_app
from .backends import (
    BackendConfig,
    BackendKind,
    ChatMessage,
    HttpBackend,
    OracleBackend,
    Role,
    TranscriptBackend,
    complete,
    make_backend,
    oracle_complete,
)
from .config import Settings, backend_config, load_settings, parse_config_file
from .errors import (
    BackendUnavailable,
    CoreError,
    DanglingEndpoint,
    EmptyCorpus,
    EmptyProcedureText,
    EmptyQuery,
    EmptyText,
    FigureNotFound,
    InvariantViolation,
    MalformedBundle,
    MalformedResponse,
    PathEscape,
    StepNotFound,
    TranscriptMiss,
    UnknownNode,
    UnknownProcedure,
    UnknownSession,
)
from .graph import (
    Edge,
    EdgeKind,
    KnowledgeGraph,
    Node,
    NodeKind,
    doc_node_id,
    figure_node_id,
    keyword_node_id,
    linked_info_block,
    metadata_node_id,
    upsert_procedure,
)
from .procedure import (
    FigureRef,
    Procedure,
    Step,
    load_procedure,
    parse_procedure_bundle,
    render_last_updated,
    render_procedure_text,
    render_step_text,
    to_bundle,
)
from .prompts import (
    PROMPT_CHAR_BUDGET,
    SYSTEM_PROMPT,
    USER_INSTRUCTION,
    PromptBundle,
    assemble_user_prompt,
    system_prompt,
)
from .reply import (
    REFUSAL_TEXT,
    TOPICALITY_THRESHOLD,
    ParsedReply,
    Segment,
    SegmentKind,
    TopicalityDecision,
    VerbatimReport,
    VerbatimStatus,
    normalize_whitespace,
    parse_markers,
    serialize_segments,
    topicality_gate,
    verify_verbatim,
)
from .retrieval import (
    BM25_B,
    BM25_K1,
    VECTOR_DIM,
    Chunk,
    IndexedCorpus,
    RetrievalResult,
    build_corpus,
    chunk_procedure,
    cosine,
    embed,
    hybrid_retrieve,
    lexical_score,
    load_index,
    save_index,
    tokenize,
)
from .service import (
    EngineService,
    EventKind,
    HistoryEntry,
    IngestSummary,
    QueryResult,
    Session,
    SessionEvent,
)

__all__ = [name for name in dir() if not name.startswith("_")]
