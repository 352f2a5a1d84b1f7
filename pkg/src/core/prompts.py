"""Prompt assembly: fixed instruction templates plus the retrieved context.

Both template constants are frozen; golden fixtures pin them byte-for-byte,
so any edit here must update those fixtures deliberately.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyProcedureText

SYSTEM_PROMPT = (
    "You are a helpful assistant for astronauts, answering questions about "
    "provided procedures. If asked a question, respond with either the next "
    "step or the first step only. Name the corresponding step as "
    "<<STEP [NUMBER]>> and repeat the text of the procedure step word for "
    "word. If a figure or other data is referenced, include "
    "<<SHOW FIGURE [NUMBER]>> in your answer."
)

USER_INSTRUCTION = (
    "You will be presented with a matching procedure enclosed by three "
    "quotation marks ('''). If a question is asked, respond with either the "
    "next step or only the first step. Specify the relevant step and repeat "
    "the text of the procedure step verbatim. If the information does not "
    "correspond to the question or if information is missing, state that "
    "this is the case."
)

ENCLOSURE = "'''"
PROMPT_CHAR_BUDGET = 16000


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    procedure_id: str
    chunk_ids: tuple[str, ...]


def system_prompt() -> str:
    return SYSTEM_PROMPT


def _render_user(query: str, procedure_text: str, graph_info: str) -> str:
    enclosed = procedure_text
    if graph_info:
        enclosed += "\n\n" + graph_info
    return "\n".join([USER_INSTRUCTION, ENCLOSURE, enclosed, ENCLOSURE, query])


def assemble_user_prompt(
    query: str,
    procedure_text: str,
    graph_info: str = "",
    procedure_id: str = "",
    chunk_ids: tuple[str, ...] = (),
) -> PromptBundle:
    """Instruction paragraph, quoted context, then the query on its own line.

    Procedure text comes first inside the enclosure, one blank line, then the
    graph lines; the query never enters the enclosure.  Over the character
    budget, graph lines are dropped from the end before procedure text is
    ever cut.
    """
    if not procedure_text.strip():
        raise EmptyProcedureText("procedure text must be nonempty")

    user = _render_user(query, procedure_text, graph_info)
    if len(user) > PROMPT_CHAR_BUDGET:
        graph_lines = graph_info.splitlines() if graph_info else []
        while graph_lines and len(user) > PROMPT_CHAR_BUDGET:
            graph_lines.pop()
            user = _render_user(query, procedure_text, "\n".join(graph_lines))
        if len(user) > PROMPT_CHAR_BUDGET:
            overhead = len(_render_user(query, "", ""))
            keep = max(1, PROMPT_CHAR_BUDGET - overhead)
            user = _render_user(query, procedure_text[:keep], "")

    return PromptBundle(
        system=SYSTEM_PROMPT,
        user=user,
        procedure_id=procedure_id,
        chunk_ids=tuple(chunk_ids),
    )
