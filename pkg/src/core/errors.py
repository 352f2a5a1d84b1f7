"""Exception hierarchy shared across the engine.

Every error carries a stable ``code`` slug and a ``retriable`` flag so the
HTTP layer can map any failure to the structured JSON error body
``{code, message, retriable}`` without per-route special cases.
"""

from __future__ import annotations


class CoreError(Exception):
    """Base class for all engine errors."""

    code = "core_error"
    retriable = False


class MalformedBundle(CoreError):
    """Procedure bundle is not valid UTF-8 JSON or violates the schema."""

    code = "malformed_bundle"

    def __init__(self, reason: str, line: int | None = None):
        self.reason = reason
        self.line = line
        suffix = f" (line {line})" if line is not None else ""
        super().__init__(f"{reason}{suffix}")


class InvariantViolation(CoreError):
    """Parsed data breaks a structural invariant (step gaps, dangling refs...)."""

    code = "invariant_violation"

    def __init__(self, which: str):
        self.which = which
        super().__init__(which)


class PathEscape(CoreError):
    """A media path points outside its bundle directory."""

    code = "path_escape"


class StepNotFound(CoreError):
    code = "step_not_found"

    def __init__(self, number: int):
        self.number = number
        super().__init__(f"no step {number}")


class FigureNotFound(CoreError):
    code = "figure_not_found"

    def __init__(self, procedure_id: str, number: int):
        self.procedure_id = procedure_id
        self.number = number
        super().__init__(f"no figure {number} in {procedure_id}")


class DanglingEndpoint(CoreError):
    code = "dangling_endpoint"


class UnknownNode(CoreError):
    code = "unknown_node"


class UnknownProcedure(CoreError):
    code = "unknown_procedure"


class EmptyText(CoreError):
    """Text produced no tokens, so it cannot be embedded."""

    code = "empty_text"


class EmptyCorpus(CoreError):
    code = "empty_corpus"


class EmptyProcedureText(CoreError):
    code = "empty_procedure_text"


class BackendUnavailable(CoreError):
    """Chat-completion server unreachable after retries. Safe to retry later."""

    code = "backend_unavailable"
    retriable = True


class TranscriptMiss(CoreError):
    code = "transcript_miss"


class MalformedResponse(CoreError):
    """Chat-completion wire response did not match the expected JSON shape."""

    code = "malformed_response"


class UnknownSession(CoreError):
    code = "unknown_session"


class EmptyQuery(CoreError):
    code = "empty_query"
