"""Hybrid lexical + vector retrieval over procedure chunks.

The corpus is small (tens of chunks), so everything is exact: BM25 for the
lexical side, a deterministic feature-hashing embedder for the vector side.
An :class:`IndexedCorpus` is immutable once built; ingest builds a fresh one
and swaps it in.
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyCorpus, EmptyText
from .procedure import Procedure, render_last_updated, render_step_text

VECTOR_DIM = 256
BM25_K1 = 1.2
BM25_B = 0.75

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_MIN_TOKEN_LEN = 2

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric runs; tokens shorter than 2 chars are noise."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= _MIN_TOKEN_LEN]


def _fnv1a64(token: str) -> int:
    h = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def _token_slot(token: str) -> tuple[int, float]:
    """Hash a token to (bucket, sign); sign comes from the hash's bit parity."""
    h = _fnv1a64(token)
    bucket = h % VECTOR_DIM
    sign = 1.0 if h.bit_count() % 2 == 0 else -1.0
    return bucket, sign


def embed(text: str) -> tuple[float, ...]:
    """Feature-hashed term-frequency vector, L2-normalized to unit length."""
    tokens = tokenize(text)
    if not tokens:
        raise EmptyText(f"no tokens in {text!r}")
    vec = [0.0] * VECTOR_DIM
    for token in tokens:
        bucket, sign = _token_slot(token)
        vec[bucket] += sign
    norm = math.sqrt(sum(x * x for x in vec))
    if norm == 0.0:
        # Signed counts can cancel exactly; fall back to a unit impulse so
        # the unit-norm invariant holds for every nonempty token list.
        bucket, _ = _token_slot(tokens[0])
        vec[bucket] = 1.0
        norm = 1.0
    return tuple(x / norm for x in vec)


def cosine(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    return sum(x * y for x, y in zip(a, b))


@dataclass(frozen=True)
class Chunk:
    """One retrievable unit: a procedure header or a single step."""

    chunk_id: str
    procedure_id: str
    step_number: int | None
    text: str


@dataclass(frozen=True)
class RetrievalResult:
    chunk: Chunk
    lexical_score: float
    vector_score: float
    hybrid_score: float
    confidence: float


def chunk_procedure(proc: Procedure) -> list[Chunk]:
    """One header chunk plus one chunk per step, with stable ids."""
    header_lines = [proc.title, f"Last updated {render_last_updated(proc.last_updated)}"]
    header_lines.extend(step.label for step in proc.steps)
    chunks = [
        Chunk(
            chunk_id=f"{proc.procedure_id}:header",
            procedure_id=proc.procedure_id,
            step_number=None,
            text="\n".join(header_lines),
        )
    ]
    for step in proc.steps:
        chunks.append(
            Chunk(
                chunk_id=f"{proc.procedure_id}:step-{step.number}",
                procedure_id=proc.procedure_id,
                step_number=step.number,
                text=render_step_text(step),
            )
        )
    return chunks


@dataclass(frozen=True)
class IndexedCorpus:
    """Immutable retrieval index: chunks, BM25 statistics, unit vectors."""

    chunks: tuple[Chunk, ...]
    term_frequencies: tuple[dict[str, int], ...]
    chunk_lengths: tuple[int, ...]
    document_frequency: dict[str, int]
    average_length: float
    vectors: tuple[tuple[float, ...], ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.chunks)


def build_corpus(procedures: list[Procedure]) -> IndexedCorpus:
    chunks: list[Chunk] = []
    for proc in sorted(procedures, key=lambda p: p.procedure_id):
        chunks.extend(chunk_procedure(proc))

    term_frequencies: list[dict[str, int]] = []
    chunk_lengths: list[int] = []
    document_frequency: dict[str, int] = {}
    vectors: list[tuple[float, ...]] = []
    for chunk in chunks:
        tokens = tokenize(chunk.text)
        if not tokens:
            raise EmptyText(f"chunk {chunk.chunk_id} has no tokens")
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        term_frequencies.append(counts)
        chunk_lengths.append(len(tokens))
        for term in counts:
            document_frequency[term] = document_frequency.get(term, 0) + 1
        vectors.append(embed(chunk.text))

    average = (sum(chunk_lengths) / len(chunk_lengths)) if chunk_lengths else 0.0
    return IndexedCorpus(
        chunks=tuple(chunks),
        term_frequencies=tuple(term_frequencies),
        chunk_lengths=tuple(chunk_lengths),
        document_frequency=document_frequency,
        average_length=average,
        vectors=tuple(vectors),
    )


def _idf(corpus: IndexedCorpus, term: str) -> float:
    # Smoothed variant that stays nonnegative even for very common terms.
    df = corpus.document_frequency.get(term, 0)
    n = len(corpus.chunks)
    return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def lexical_score(corpus: IndexedCorpus, query: str, index: int) -> float:
    """BM25 of the query against chunk ``index``."""
    counts = corpus.term_frequencies[index]
    length = corpus.chunk_lengths[index]
    score = 0.0
    for term in tokenize(query):
        tf = counts.get(term, 0)
        if tf == 0:
            continue
        idf = _idf(corpus, term)
        denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * length / corpus.average_length)
        score += idf * tf * (BM25_K1 + 1.0) / denom
    return score


def hybrid_retrieve(corpus: IndexedCorpus, query: str, k: int) -> list[RetrievalResult]:
    """Top-k chunks by equal-weight lexical/vector blend.

    Lexical scores are normalized by the query's best lexical score so the
    blend lands in [0, 1]; negative cosines clamp to zero.
    """
    if len(corpus.chunks) == 0:
        raise EmptyCorpus("no chunks indexed")
    if k < 1:
        raise ValueError("k must be >= 1")

    try:
        query_vec = embed(query)
    except EmptyText:
        query_vec = None

    lexical = [lexical_score(corpus, query, i) for i in range(len(corpus.chunks))]
    max_lex = max(lexical)
    results: list[RetrievalResult] = []
    for i, chunk in enumerate(corpus.chunks):
        lex_norm = (lexical[i] / max_lex) if max_lex > 0.0 else 0.0
        vec = cosine(query_vec, corpus.vectors[i]) if query_vec is not None else 0.0
        hybrid = 0.5 * lex_norm + 0.5 * max(vec, 0.0)
        results.append(
            RetrievalResult(
                chunk=chunk,
                lexical_score=lexical[i],
                vector_score=vec,
                hybrid_score=hybrid,
                confidence=hybrid,
            )
        )
    results.sort(key=lambda r: (-r.hybrid_score, r.chunk.chunk_id))
    return results[:k]


def save_index(corpus: IndexedCorpus, path: Path) -> None:
    """Cache the index as JSON; floats round-trip exactly via repr."""
    payload = {
        "dimension": VECTOR_DIM,
        "average_length": corpus.average_length,
        "document_frequency": corpus.document_frequency,
        "chunks": [
            {
                "chunk_id": c.chunk_id,
                "procedure_id": c.procedure_id,
                "step_number": c.step_number,
                "text": c.text,
                "length": corpus.chunk_lengths[i],
                "term_frequencies": corpus.term_frequencies[i],
                "vector": list(corpus.vectors[i]),
            }
            for i, c in enumerate(corpus.chunks)
        ],
    }
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, ensure_ascii=False, sort_keys=True), encoding="utf-8")
    os.replace(tmp, path)


def load_index(path: Path) -> IndexedCorpus:
    payload = json.loads(path.read_text(encoding="utf-8"))
    chunks = tuple(
        Chunk(
            chunk_id=c["chunk_id"],
            procedure_id=c["procedure_id"],
            step_number=c["step_number"],
            text=c["text"],
        )
        for c in payload["chunks"]
    )
    return IndexedCorpus(
        chunks=chunks,
        term_frequencies=tuple(dict(c["term_frequencies"]) for c in payload["chunks"]),
        chunk_lengths=tuple(c["length"] for c in payload["chunks"]),
        document_frequency=dict(payload["document_frequency"]),
        average_length=payload["average_length"],
        vectors=tuple(tuple(c["vector"]) for c in payload["chunks"]),
    )
