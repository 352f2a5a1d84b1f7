"""Chat-completion backends: deterministic oracle, transcript mock, HTTP.

The oracle implements the instructed reply behavior exactly (step lookup,
verbatim repetition, figure markers), so the rest of the pipeline can be
tested end to end without a model.  The transcript backend replays canned
answers; the HTTP backend talks to a local chat-completion server.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import httpx

from .errors import BackendUnavailable, MalformedResponse, TranscriptMiss
from .reply import REFUSAL_TEXT


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self) -> None:
        if not self.content:
            raise ValueError("message content must be nonempty")


class BackendKind(str, Enum):
    ORACLE = "oracle"
    TRANSCRIPT = "transcript"
    HTTP = "http"


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind
    base_url: str | None = None
    model_name: str | None = None
    timeout_ms: int = 10000
    transcript_path: Path | None = None

    def __post_init__(self) -> None:
        if self.kind is BackendKind.HTTP and not (self.base_url and self.model_name):
            raise ValueError("http backend requires base_url and model_name")
        if self.kind is BackendKind.TRANSCRIPT and self.transcript_path is None:
            raise ValueError("transcript backend requires transcript_path")


def _check_messages(messages: list[ChatMessage]) -> ChatMessage:
    """Enforce the single-leading-system-message shape; return the last user turn."""
    if not messages or messages[0].role is not Role.SYSTEM:
        raise ValueError("messages must start with a system message")
    if any(m.role is Role.SYSTEM for m in messages[1:]):
        raise ValueError("only the first message may be a system message")
    for message in reversed(messages):
        if message.role is Role.USER:
            return message
    raise ValueError("messages must include a user message")


# --- oracle ---

_STEP_LINE_RE = re.compile(r"^Step ([0-9]+) - (.+)$")
_GRAPH_LINE_RE = re.compile(r"^([^:]+): (.+)$")
_HINT_RE = re.compile(r"^Current step: ([0-9]+)$")
_FIGURE_MENTION_RE = re.compile(r"\bFigure ([0-9]+)\b")

_STEP_NUMBER_RES = (
    re.compile(r"\bstep\s+([0-9]+)\b", re.IGNORECASE),
    re.compile(r"\b([0-9]+)(?:st|nd|rd|th)\s+step\b", re.IGNORECASE),
)
_ORDINALS = (
    "first",
    "second",
    "third",
    "fourth",
    "fifth",
    "sixth",
    "seventh",
    "eighth",
    "ninth",
    "tenth",
    "eleventh",
    "twelfth",
)
_ORDINAL_RE = re.compile(r"\b(" + "|".join(_ORDINALS) + r")\s+step\b", re.IGNORECASE)


@dataclass(frozen=True)
class _EnclosedContext:
    title: str
    steps: dict[int, tuple[str, list[str]]] = field(default_factory=dict)
    graph: dict[str, str] = field(default_factory=dict)


def _parse_enclosure(user_content: str) -> tuple[_EnclosedContext | None, str, int | None]:
    """Split the prompt into (context, question, hint step) best-effort.

    The delimiters are lines consisting of exactly ''' so a mention of the
    delimiter inside the instruction paragraph is not mistaken for one.
    """
    content_lines = user_content.split("\n")
    marks = [i for i, line in enumerate(content_lines) if line == "'''"]
    if len(marks) < 2:
        return None, user_content.strip(), None

    enclosed = "\n".join(content_lines[marks[0] + 1 : marks[1]]).strip("\n")
    question = "\n".join(content_lines[marks[1] + 1 :]).strip("\n")

    hint: int | None = None
    lines = question.splitlines()
    if lines:
        match = _HINT_RE.match(lines[-1])
        if match:
            hint = int(match.group(1))
            question = "\n".join(lines[:-1]).strip("\n")

    title = ""
    steps: dict[int, tuple[str, list[str]]] = {}
    graph: dict[str, str] = {}
    blocks = enclosed.split("\n\n")
    saw_step = False
    for i, block in enumerate(blocks):
        block_lines = block.split("\n")
        match = _STEP_LINE_RE.match(block_lines[0])
        if match:
            number = int(match.group(1))
            label = match.group(2).rstrip(":")
            steps[number] = (label, block_lines[1:])
            saw_step = True
        elif i == 0:
            title = block.strip()
        elif i == len(blocks) - 1 and saw_step:
            for line in block_lines:
                graph_match = _GRAPH_LINE_RE.match(line)
                if graph_match:
                    graph[graph_match.group(1)] = graph_match.group(2)

    return _EnclosedContext(title=title, steps=steps, graph=graph), question, hint


def _requested_step(question: str) -> int | None:
    for pattern in _STEP_NUMBER_RES:
        match = pattern.search(question)
        if match:
            return int(match.group(1))
    match = _ORDINAL_RE.search(question)
    if match:
        return _ORDINALS.index(match.group(1).lower()) + 1
    return None


def _step_reply(context: _EnclosedContext, number: int) -> str:
    label, body = context.steps[number]
    text = f"<<STEP {number}>> - {label}:" + ("\n" + "\n".join(body) if body else "")
    seen: list[int] = []
    for line in body:
        for match in _FIGURE_MENTION_RE.finditer(line):
            fig = int(match.group(1))
            if fig not in seen:
                seen.append(fig)
    for fig in seen:
        text += f" <<SHOW FIGURE {fig}>>"
    return text


def oracle_complete(messages: list[ChatMessage]) -> str:
    """Answer exactly as the prompt instructs, from the enclosure alone.

    Resolution order: explicit step reference in the question, then a graph
    metadata key mentioned in the question, then the hint's next step, then
    the first step.  Anything unresolvable gets the refusal sentence.
    """
    user = _check_messages(messages)
    context, question, hint = _parse_enclosure(user.content)
    if context is None or not context.steps:
        return REFUSAL_TEXT

    requested = _requested_step(question)
    if requested is not None:
        if requested not in context.steps:
            return REFUSAL_TEXT
        return _step_reply(context, requested)

    lowered = question.lower()
    for key, value in context.graph.items():
        if key.lower() in lowered:
            return f"The procedure's {key} is {value}."

    if hint is not None:
        if hint + 1 not in context.steps:
            return REFUSAL_TEXT
        return _step_reply(context, hint + 1)

    if 1 not in context.steps:
        return REFUSAL_TEXT
    return _step_reply(context, 1)


class OracleBackend:
    def complete(self, messages: list[ChatMessage]) -> str:
        return oracle_complete(messages)


class TranscriptBackend:
    """Replays canned replies keyed by substring of the last user message."""

    def __init__(self, path: Path):
        raw = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(raw, list):
            raise MalformedResponse("transcript must be a JSON list")
        self._entries: list[tuple[str, str]] = []
        for entry in raw:
            if not isinstance(entry, dict) or "match" not in entry or "reply" not in entry:
                raise MalformedResponse("transcript entries need 'match' and 'reply'")
            self._entries.append((entry["match"], entry["reply"]))

    def complete(self, messages: list[ChatMessage]) -> str:
        user = _check_messages(messages)
        for needle, reply in self._entries:
            if needle in user.content:
                return reply
        raise TranscriptMiss("no transcript entry matches the user message")


_RETRY_DELAYS_MS = (250, 1000)


class HttpBackend:
    """JSON POST to a local chat-completion server, deterministic settings."""

    def __init__(
        self,
        base_url: str,
        model_name: str,
        timeout_ms: int = 10000,
        transport: httpx.BaseTransport | None = None,
        sleep=time.sleep,
    ):
        self._base_url = base_url.rstrip("/")
        self._model = model_name
        self._client = httpx.Client(timeout=timeout_ms / 1000.0, transport=transport)
        self._sleep = sleep

    def complete(self, messages: list[ChatMessage]) -> str:
        _check_messages(messages)
        payload = {
            "model": self._model,
            "messages": [{"role": m.role.value, "content": m.content} for m in messages],
            "temperature": 0.0,
        }
        url = f"{self._base_url}/v1/chat/completions"
        last_error: Exception | None = None
        for attempt in range(1 + len(_RETRY_DELAYS_MS)):
            if attempt > 0:
                self._sleep(_RETRY_DELAYS_MS[attempt - 1] / 1000.0)
            try:
                response = self._client.post(url, json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = BackendUnavailable(f"server returned {response.status_code}")
                continue
            if response.status_code != 200:
                raise BackendUnavailable(f"server returned {response.status_code}")
            try:
                data = response.json()
                content = data["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise MalformedResponse(f"unexpected completion shape: {exc}") from exc
            if not isinstance(content, str):
                raise MalformedResponse("completion content is not a string")
            return content
        raise BackendUnavailable(f"no response after retries: {last_error}")

    def close(self) -> None:
        self._client.close()


def make_backend(config: BackendConfig):
    if config.kind is BackendKind.ORACLE:
        return OracleBackend()
    if config.kind is BackendKind.TRANSCRIPT:
        assert config.transcript_path is not None
        return TranscriptBackend(config.transcript_path)
    assert config.base_url is not None and config.model_name is not None
    return HttpBackend(config.base_url, config.model_name, config.timeout_ms)


def complete(config: BackendConfig, messages: list[ChatMessage]) -> str:
    return make_backend(config).complete(messages)
