"""Procedure bundle model: parsing, validation, and text rendering.

A bundle is a UTF-8 JSON file describing one checklist procedure: header
metadata, optional figures, and an ordered list of steps.  Parsing is total
over byte input; any problem raises :class:`MalformedBundle`,
:class:`InvariantViolation`, or :class:`PathEscape` with a reason instead of
producing a partial object.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvariantViolation, MalformedBundle, PathEscape, StepNotFound

MONTHS = (
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
)

_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")
_ID_RE = re.compile(r"^[a-z0-9][a-z0-9-]*$")

_BUNDLE_KEYS = {"id", "title", "last_updated", "figures", "steps"}
_FIGURE_KEYS = {"number", "caption", "media"}
_STEP_KEYS = {"number", "label", "body", "figures"}


@dataclass(frozen=True)
class FigureRef:
    """One figure attached to a procedure."""

    number: int
    caption: str
    media: str


@dataclass(frozen=True)
class Step:
    """One checklist step: a label line plus verbatim body lines."""

    number: int
    label: str
    body: tuple[str, ...]
    figures: tuple[int, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class Procedure:
    """A fully validated procedure document."""

    procedure_id: str
    title: str
    last_updated: str
    figures: tuple[FigureRef, ...]
    steps: tuple[Step, ...]

    def lookup_step(self, number: int) -> Step:
        for step in self.steps:
            if step.number == number:
                return step
        raise StepNotFound(number)

    def figure(self, number: int) -> FigureRef | None:
        for fig in self.figures:
            if fig.number == number:
                return fig
        return None


def _require(cond: bool, reason: str) -> None:
    if not cond:
        raise MalformedBundle(reason)


def _check_str(value: object, what: str) -> str:
    _require(isinstance(value, str), f"{what} must be a string")
    return value  # type: ignore[return-value]


def _check_int(value: object, what: str) -> int:
    # bool is an int subclass; reject it explicitly.
    _require(isinstance(value, int) and not isinstance(value, bool), f"{what} must be an integer")
    return value  # type: ignore[return-value]


def _validate_date(value: str) -> str:
    m = _DATE_RE.match(value)
    _require(m is not None, f"last_updated {value!r} is not YYYY-MM-DD")
    assert m is not None
    year, month, day = int(m.group(1)), int(m.group(2)), int(m.group(3))
    _require(1 <= month <= 12, f"last_updated month {month} out of range")
    days_in_month = (31, 29 if _leap(year) else 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
    _require(1 <= day <= days_in_month[month - 1], f"last_updated day {day} out of range")
    return value


def _leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def parse_procedure_bundle(raw: bytes, base_dir: Path | None = None) -> Procedure:
    """Parse and validate a bundle; reject anything outside the schema.

    ``base_dir`` is the directory media paths must stay inside; when given,
    any figure whose ``media`` resolves outside it raises :class:`PathEscape`.
    """
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedBundle(f"not valid UTF-8: {exc.reason}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedBundle(f"not valid JSON: {exc.msg}", line=exc.lineno) from exc

    _require(isinstance(data, dict), "top level must be a JSON object")
    unknown = set(data) - _BUNDLE_KEYS
    _require(not unknown, f"unknown keys: {sorted(unknown)}")
    missing = _BUNDLE_KEYS - set(data)
    _require(not missing, f"missing keys: {sorted(missing)}")

    pid = _check_str(data["id"], "id")
    _require(bool(_ID_RE.match(pid)), f"id {pid!r} must be lowercase alphanumeric/hyphen")
    title = _check_str(data["title"], "title")
    _require(title.strip() != "", "title must be non-empty")
    last_updated = _validate_date(_check_str(data["last_updated"], "last_updated"))

    figures = _parse_figures(data["figures"], base_dir)
    steps = _parse_steps(data["steps"], {f.number for f in figures})

    return Procedure(
        procedure_id=pid,
        title=title,
        last_updated=last_updated,
        figures=figures,
        steps=steps,
    )


def _parse_figures(raw: object, base_dir: Path | None) -> tuple[FigureRef, ...]:
    _require(isinstance(raw, list), "figures must be a list")
    figures: list[FigureRef] = []
    seen: set[int] = set()
    for i, item in enumerate(raw):  # type: ignore[arg-type]
        _require(isinstance(item, dict), f"figures[{i}] must be an object")
        unknown = set(item) - _FIGURE_KEYS
        _require(not unknown, f"figures[{i}] unknown keys: {sorted(unknown)}")
        missing = _FIGURE_KEYS - set(item)
        _require(not missing, f"figures[{i}] missing keys: {sorted(missing)}")
        number = _check_int(item["number"], f"figures[{i}].number")
        _require(number >= 1, f"figures[{i}].number must be positive")
        if number in seen:
            raise InvariantViolation(f"duplicate figure number {number}")
        seen.add(number)
        caption = _check_str(item["caption"], f"figures[{i}].caption")
        media = _check_str(item["media"], f"figures[{i}].media")
        _require(media != "", f"figures[{i}].media must be non-empty")
        _check_media_path(media, base_dir)
        figures.append(FigureRef(number=number, caption=caption, media=media))
    return tuple(figures)


def _check_media_path(media: str, base_dir: Path | None) -> None:
    path = Path(media)
    if path.is_absolute() or ".." in path.parts:
        raise PathEscape(f"media path {media!r} escapes the bundle directory")
    if base_dir is not None:
        root = base_dir.resolve()
        resolved = (root / path).resolve()
        if root not in resolved.parents and resolved != root:
            raise PathEscape(f"media path {media!r} escapes the bundle directory")


def _parse_steps(raw: object, figure_numbers: set[int]) -> tuple[Step, ...]:
    _require(isinstance(raw, list), "steps must be a list")
    _require(len(raw) > 0, "steps must be non-empty")  # type: ignore[arg-type]
    steps: list[Step] = []
    for i, item in enumerate(raw):  # type: ignore[arg-type]
        _require(isinstance(item, dict), f"steps[{i}] must be an object")
        unknown = set(item) - _STEP_KEYS
        _require(not unknown, f"steps[{i}] unknown keys: {sorted(unknown)}")
        missing = _STEP_KEYS - set(item)
        _require(not missing, f"steps[{i}] missing keys: {sorted(missing)}")
        number = _check_int(item["number"], f"steps[{i}].number")
        label = _check_str(item["label"], f"steps[{i}].label")
        _require(label.strip() != "", f"steps[{i}].label must be non-empty")
        body_raw = item["body"]
        _require(isinstance(body_raw, list), f"steps[{i}].body must be a list")
        _require(len(body_raw) > 0, f"steps[{i}].body must be non-empty")
        body = tuple(_check_str(line, f"steps[{i}].body[{j}]") for j, line in enumerate(body_raw))
        for j, line in enumerate(body):
            if line.strip() == "":
                raise InvariantViolation(f"steps[{i}].body[{j}] is all-whitespace")
        figs_raw = item["figures"]
        _require(isinstance(figs_raw, list), f"steps[{i}].figures must be a list")
        figs = tuple(_check_int(n, f"steps[{i}].figures[{j}]") for j, n in enumerate(figs_raw))
        if number != i + 1:
            raise InvariantViolation(f"steps must be numbered 1..N contiguously; found {number} at position {i}")
        for n in figs:
            if n not in figure_numbers:
                raise InvariantViolation(f"step {number} references missing figure {n}")
        steps.append(Step(number=number, label=label, body=body, figures=figs))
    return tuple(steps)


def load_procedure(path: Path) -> Procedure:
    """Read a bundle file, containing media paths to the file's directory."""
    return parse_procedure_bundle(path.read_bytes(), base_dir=path.parent)


def to_bundle(proc: Procedure) -> dict:
    """Inverse of parsing: a JSON-compatible dict that re-parses identically."""
    return {
        "id": proc.procedure_id,
        "title": proc.title,
        "last_updated": proc.last_updated,
        "figures": [
            {"number": f.number, "caption": f.caption, "media": f.media} for f in proc.figures
        ],
        "steps": [
            {
                "number": s.number,
                "label": s.label,
                "body": list(s.body),
                "figures": list(s.figures),
            }
            for s in proc.steps
        ],
    }


def render_step_text(step: Step) -> str:
    """The verbatim text a reply must repeat: label line plus body lines."""
    return step.label + ":\n" + "\n".join(step.body)


def render_last_updated(date: str) -> str:
    """Render YYYY-MM-DD as 'DD Month YYYY', keeping the zero-padded day."""
    m = _DATE_RE.match(date)
    if m is None:
        raise InvariantViolation(f"date {date!r} is not YYYY-MM-DD")
    return f"{m.group(3)} {MONTHS[int(m.group(2)) - 1]} {m.group(1)}"


def render_procedure_text(proc: Procedure) -> str:
    """Full expanded text: title, then one block per step, blank-line separated."""
    blocks = [proc.title]
    for step in proc.steps:
        blocks.append(f"Step {step.number} - " + render_step_text(step))
    return "\n\n".join(blocks)
