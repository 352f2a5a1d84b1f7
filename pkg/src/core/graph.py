"""Typed knowledge graph over ingested procedures.

Nodes and edges are identified by content-derived ids, so re-ingesting the
same bundle is idempotent.  The graph persists as JSON Lines (one node or
edge per line) and answers one-hop neighbor queries that feed prompt
assembly.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import DanglingEndpoint, UnknownNode, UnknownProcedure
from .procedure import Procedure, render_last_updated


class NodeKind(str, Enum):
    PROCEDURE_DOC = "ProcedureDoc"
    FIGURE = "Figure"
    METADATA = "Metadata"
    KEYWORD = "Keyword"


class EdgeKind(str, Enum):
    HAS_FIGURE = "HasFigure"
    HAS_METADATA = "HasMetadata"
    HAS_KEYWORD = "HasKeyword"
    REFERENCES = "References"


@dataclass(frozen=True)
class Node:
    """A typed node; attribute order is meaningful and survives persistence."""

    node_id: str
    kind: NodeKind
    attributes: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Edge:
    kind: EdgeKind
    source: str
    target: str

    @property
    def edge_id(self) -> str:
        return f"{self.kind.value}:{self.source}->{self.target}"


_SLUG_RE = re.compile(r"[^a-z0-9]+")


def slugify(text: str) -> str:
    """Lowercase, collapse non-alphanumeric runs to single hyphens."""
    return _SLUG_RE.sub("-", text.lower()).strip("-")


def doc_node_id(procedure_id: str) -> str:
    return f"procedure-doc:{slugify(procedure_id)}"


def figure_node_id(procedure_id: str, number: int) -> str:
    return f"figure:{slugify(procedure_id)}-{number}"


def metadata_node_id(procedure_id: str, key: str) -> str:
    return f"metadata:{slugify(procedure_id)}-{slugify(key)}"


def keyword_node_id(term: str) -> str:
    return f"keyword:{slugify(term)}"


class KnowledgeGraph:
    """In-memory typed graph, single writer, JSONL persistence."""

    def __init__(self) -> None:
        self._nodes: dict[str, Node] = {}
        self._edges: dict[str, Edge] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def get_node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def add_node(self, node: Node) -> str:
        """Insert or replace; identical re-insert leaves the graph unchanged."""
        with self._lock:
            self._nodes[node.node_id] = node
        return node.node_id

    def add_edge(self, edge: Edge) -> None:
        """Insert an edge; duplicates are ignored, missing endpoints rejected."""
        with self._lock:
            if edge.source not in self._nodes or edge.target not in self._nodes:
                raise DanglingEndpoint(f"edge {edge.edge_id} references a missing node")
            self._edges[edge.edge_id] = edge

    def neighbors(self, node_id: str, kind_filter: EdgeKind | None = None) -> list[Node]:
        """One-hop neighbor nodes in both directions, sorted by node id."""
        if node_id not in self._nodes:
            raise UnknownNode(node_id)
        found: dict[str, Node] = {}
        for edge in self._edges.values():
            if kind_filter is not None and edge.kind is not kind_filter:
                continue
            if edge.source == node_id and edge.target != node_id:
                found[edge.target] = self._nodes[edge.target]
            elif edge.target == node_id and edge.source != node_id:
                found[edge.source] = self._nodes[edge.source]
        return [found[key] for key in sorted(found)]

    def edges_of(self, node_id: str) -> list[Edge]:
        if node_id not in self._nodes:
            raise UnknownNode(node_id)
        out = [e for e in self._edges.values() if node_id in (e.source, e.target)]
        out.sort(key=lambda e: e.edge_id)
        return out

    def nodes(self) -> list[Node]:
        return sorted(self._nodes.values(), key=lambda n: n.node_id)

    def edges(self) -> list[Edge]:
        return sorted(self._edges.values(), key=lambda e: e.edge_id)

    # --- persistence ---

    def save(self, path: Path) -> None:
        """Write JSONL atomically: all nodes first, then all edges."""
        lines: list[str] = []
        for node in self.nodes():
            lines.append(
                json.dumps(
                    {
                        "node": {
                            "id": node.node_id,
                            "kind": node.kind.value,
                            "attributes": [[k, v] for k, v in node.attributes],
                        }
                    },
                    ensure_ascii=False,
                )
            )
        for edge in self.edges():
            lines.append(
                json.dumps(
                    {"edge": {"kind": edge.kind.value, "source": edge.source, "target": edge.target}},
                    ensure_ascii=False,
                )
            )
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: Path) -> "KnowledgeGraph":
        graph = cls()
        pending: list[Edge] = []
        with path.open(encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                record = json.loads(raw)
                if "node" in record:
                    spec = record["node"]
                    graph.add_node(
                        Node(
                            node_id=spec["id"],
                            kind=NodeKind(spec["kind"]),
                            attributes=tuple((k, v) for k, v in spec.get("attributes", [])),
                        )
                    )
                elif "edge" in record:
                    spec = record["edge"]
                    pending.append(
                        Edge(kind=EdgeKind(spec["kind"]), source=spec["source"], target=spec["target"])
                    )
        for edge in pending:
            graph.add_edge(edge)
        return graph


@dataclass(frozen=True)
class ProjectionSummary:
    nodes_touched: int
    edges_touched: int


def upsert_procedure(graph: KnowledgeGraph, proc: Procedure) -> ProjectionSummary:
    """Project a procedure's metadata and figures into the graph.

    Re-projecting an unchanged procedure touches the same node ids, so the
    summary is stable across identical re-ingests.
    """
    nodes = 0
    edges = 0
    doc_id = graph.add_node(
        Node(
            node_id=doc_node_id(proc.procedure_id),
            kind=NodeKind.PROCEDURE_DOC,
            attributes=(("procedure_id", proc.procedure_id), ("title", proc.title)),
        )
    )
    nodes += 1

    meta_id = graph.add_node(
        Node(
            node_id=metadata_node_id(proc.procedure_id, "last-update"),
            kind=NodeKind.METADATA,
            attributes=(("Last update", render_last_updated(proc.last_updated)),),
        )
    )
    graph.add_edge(Edge(kind=EdgeKind.HAS_METADATA, source=doc_id, target=meta_id))
    nodes += 1
    edges += 1

    referenced = {n for step in proc.steps for n in step.figures}
    for fig in proc.figures:
        fig_id = graph.add_node(
            Node(
                node_id=figure_node_id(proc.procedure_id, fig.number),
                kind=NodeKind.FIGURE,
                attributes=((f"Figure {fig.number}", fig.caption),),
            )
        )
        graph.add_edge(Edge(kind=EdgeKind.HAS_FIGURE, source=doc_id, target=fig_id))
        nodes += 1
        edges += 1
        if fig.number in referenced:
            graph.add_edge(Edge(kind=EdgeKind.REFERENCES, source=fig_id, target=doc_id))
            edges += 1

    return ProjectionSummary(nodes_touched=nodes, edges_touched=edges)


def linked_info_block(graph: KnowledgeGraph, procedure_id: str) -> str:
    """Prompt-ready block: every attribute of every one-hop neighbor.

    Lines are ordered by (node id, attribute insertion order); the doc node's
    own attributes are not included.
    """
    doc_id = doc_node_id(procedure_id)
    if not graph.has_node(doc_id):
        raise UnknownProcedure(procedure_id)
    lines: list[str] = []
    for node in graph.neighbors(doc_id):
        for key, value in node.attributes:
            lines.append(f"{key}: {value}")
    return "\n".join(lines)
