"""Reply handling: marker parsing, verbatim verification, topicality gate.

Marker parsing is total over arbitrary text.  Verification is strict by
design: a step reply either repeats the source text exactly (modulo
whitespace runs) or it fails, there is no partial credit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import StepNotFound
from .procedure import Procedure, render_step_text
from .retrieval import RetrievalResult

REFUSAL_TEXT = "I can only answer questions about the provided procedures."
TOPICALITY_THRESHOLD = 0.35

# Case-sensitive, 1..9 ASCII digits; anything else marker-like stays text.
_MARKER_RE = re.compile(r"<<STEP ([0-9]{1,9})>>|<<SHOW FIGURE ([0-9]{1,9})>>")


class SegmentKind(str, Enum):
    TEXT = "text"
    STEP = "step"
    FIGURE = "figure"


@dataclass(frozen=True)
class Segment:
    """One parsed token: raw text plus the marker value when applicable."""

    kind: SegmentKind
    text: str
    number: int | None = None


@dataclass(frozen=True)
class ParsedReply:
    step_number: int | None
    figure_numbers: tuple[int, ...]
    body: str
    segments: tuple[Segment, ...]


class VerbatimStatus(str, Enum):
    PASS = "Pass"
    FAIL = "Fail"
    NOT_APPLICABLE = "NotApplicable"


@dataclass(frozen=True)
class VerbatimReport:
    status: VerbatimStatus
    expected: str
    found_span: str | None = None
    first_divergence: int | None = None


@dataclass(frozen=True)
class TopicalityDecision:
    proceed: bool
    top_confidence: float
    threshold: float


def parse_markers(raw: str) -> ParsedReply:
    """Split a reply into text and marker segments; never raises.

    A marker whose digits read zero is outside the step/figure domain and is
    kept as plain text.  ``step_number`` is set only when exactly one step
    marker is present.
    """
    segments: list[Segment] = []
    step_values: list[int] = []
    figures: list[int] = []
    pos = 0

    def push_text(text: str) -> None:
        if not text:
            return
        if segments and segments[-1].kind is SegmentKind.TEXT:
            merged = segments[-1].text + text
            segments[-1] = Segment(kind=SegmentKind.TEXT, text=merged)
        else:
            segments.append(Segment(kind=SegmentKind.TEXT, text=text))

    for match in _MARKER_RE.finditer(raw):
        push_text(raw[pos : match.start()])
        pos = match.end()
        step_digits, figure_digits = match.group(1), match.group(2)
        value = int(step_digits if step_digits is not None else figure_digits)
        if value == 0:
            push_text(match.group(0))
        elif step_digits is not None:
            segments.append(Segment(kind=SegmentKind.STEP, text=match.group(0), number=value))
            step_values.append(value)
        else:
            segments.append(Segment(kind=SegmentKind.FIGURE, text=match.group(0), number=value))
            if value not in figures:
                figures.append(value)
    push_text(raw[pos:])

    return ParsedReply(
        step_number=step_values[0] if len(step_values) == 1 else None,
        figure_numbers=tuple(figures),
        body=raw,
        segments=tuple(segments),
    )


def serialize_segments(segments: tuple[Segment, ...]) -> str:
    return "".join(seg.text for seg in segments)


def normalize_whitespace(text: str) -> str:
    """Collapse whitespace runs (newlines included) to single spaces."""
    return " ".join(text.split())


def _reply_text(reply: ParsedReply) -> str:
    return " ".join(seg.text for seg in reply.segments if seg.kind is SegmentKind.TEXT)


def verify_verbatim(reply: ParsedReply, proc: Procedure) -> VerbatimReport:
    """Check that a step reply repeats the source step text exactly.

    Both sides are whitespace-normalized; all other characters, casing and
    symbols included, must match.  Pass requires the expected text to appear
    as a contiguous run of whole whitespace-delimited words, so a boundary
    word extended by even one character fails.
    """
    if reply.step_number is None:
        return VerbatimReport(status=VerbatimStatus.NOT_APPLICABLE, expected="")

    try:
        step = proc.lookup_step(reply.step_number)
    except StepNotFound:
        return VerbatimReport(status=VerbatimStatus.FAIL, expected="")

    expected = normalize_whitespace(render_step_text(step))
    got = normalize_whitespace(_reply_text(reply))

    expected_tokens = expected.split(" ")
    got_tokens = got.split(" ")
    best = 0
    for start in range(len(got_tokens)):
        run = 0
        while (
            run < len(expected_tokens)
            and start + run < len(got_tokens)
            and got_tokens[start + run] == expected_tokens[run]
        ):
            run += 1
        if run == len(expected_tokens):
            return VerbatimReport(
                status=VerbatimStatus.PASS,
                expected=expected,
                found_span=" ".join(got_tokens[start : start + run]),
            )
        best = max(best, run)
    return VerbatimReport(status=VerbatimStatus.FAIL, expected=expected, first_divergence=best)


def topicality_gate(results: list[RetrievalResult], threshold: float = TOPICALITY_THRESHOLD) -> TopicalityDecision:
    """Decide whether the query is close enough to the corpus to answer."""
    if not results:
        return TopicalityDecision(proceed=False, top_confidence=0.0, threshold=threshold)
    top = results[0].confidence
    return TopicalityDecision(proceed=top >= threshold, top_confidence=top, threshold=threshold)
