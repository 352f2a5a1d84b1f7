"""Knowledge graph: ops, projections, prompt block, persistence."""

import pytest

from core import (
    DanglingEndpoint,
    Edge,
    EdgeKind,
    KnowledgeGraph,
    Node,
    NodeKind,
    UnknownNode,
    UnknownProcedure,
    doc_node_id,
    figure_node_id,
    linked_info_block,
    metadata_node_id,
    upsert_procedure,
)

from .oracles import ref_one_hop


def cpr_graph(cpr) -> KnowledgeGraph:
    graph = KnowledgeGraph()
    upsert_procedure(graph, cpr)
    return graph


class TestOps:
    def test_add_and_get(self):
        graph = KnowledgeGraph()
        node_id = graph.add_node(Node("metadata:x", NodeKind.METADATA, (("k", "v"),)))
        assert node_id == "metadata:x"
        assert graph.get_node("metadata:x").attributes == (("k", "v"),)

    def test_get_unknown(self):
        with pytest.raises(UnknownNode):
            KnowledgeGraph().get_node("nope")

    def test_add_node_idempotent(self):
        graph = KnowledgeGraph()
        node = Node("keyword:a", NodeKind.KEYWORD, (("term", "a"),))
        graph.add_node(node)
        graph.add_node(node)
        assert len(graph) == 1

    def test_add_edge_requires_endpoints(self):
        graph = KnowledgeGraph()
        graph.add_node(Node("keyword:a", NodeKind.KEYWORD))
        with pytest.raises(DanglingEndpoint):
            graph.add_edge(Edge(EdgeKind.HAS_KEYWORD, "keyword:a", "keyword:missing"))

    def test_duplicate_edge_ignored(self):
        graph = KnowledgeGraph()
        graph.add_node(Node("keyword:a", NodeKind.KEYWORD))
        graph.add_node(Node("keyword:b", NodeKind.KEYWORD))
        edge = Edge(EdgeKind.HAS_KEYWORD, "keyword:a", "keyword:b")
        graph.add_edge(edge)
        graph.add_edge(edge)
        assert graph.edge_count == 1

    def test_neighbors_after_insert(self):
        graph = KnowledgeGraph()
        graph.add_node(Node("procedure-doc:p", NodeKind.PROCEDURE_DOC, (("procedure_id", "p"),)))
        graph.add_node(Node("metadata:p-x", NodeKind.METADATA, (("X", "1"),)))
        graph.add_edge(Edge(EdgeKind.HAS_METADATA, "procedure-doc:p", "metadata:p-x"))
        assert [n.node_id for n in graph.neighbors("procedure-doc:p")] == ["metadata:p-x"]

    def test_neighbors_sorted_and_bidirectional(self):
        graph = KnowledgeGraph()
        graph.add_node(Node("procedure-doc:p", NodeKind.PROCEDURE_DOC))
        graph.add_node(Node("metadata:p-b", NodeKind.METADATA, (("B", "2"),)))
        graph.add_node(Node("figure:p-1", NodeKind.FIGURE, (("Figure 1", "c"),)))
        graph.add_edge(Edge(EdgeKind.HAS_METADATA, "procedure-doc:p", "metadata:p-b"))
        # reversed direction still counts as one hop
        graph.add_edge(Edge(EdgeKind.REFERENCES, "figure:p-1", "procedure-doc:p"))
        assert [n.node_id for n in graph.neighbors("procedure-doc:p")] == [
            "figure:p-1",
            "metadata:p-b",
        ]

    def test_neighbors_kind_filter(self, cpr):
        graph = cpr_graph(cpr)
        doc = doc_node_id("iss-cpr")
        metadata_only = graph.neighbors(doc, kind_filter=EdgeKind.HAS_METADATA)
        assert [n.node_id for n in metadata_only] == [metadata_node_id("iss-cpr", "last-update")]

    def test_neighbors_isolated(self):
        graph = KnowledgeGraph()
        graph.add_node(Node("keyword:k", NodeKind.KEYWORD))
        assert graph.neighbors("keyword:k") == []

    def test_neighbors_unknown(self):
        with pytest.raises(UnknownNode):
            KnowledgeGraph().neighbors("nope")


class TestProjection:
    def test_cpr_projection(self, cpr):
        graph = cpr_graph(cpr)
        doc = doc_node_id("iss-cpr")
        meta = graph.get_node(metadata_node_id("iss-cpr", "last-update"))
        assert meta.kind is NodeKind.METADATA
        assert meta.attributes == (("Last update", "09 April 2015"),)
        fig = graph.get_node(figure_node_id("iss-cpr", 1))
        assert fig.kind is NodeKind.FIGURE
        neighbor_ids = {n.node_id for n in graph.neighbors(doc)}
        assert meta.node_id in neighbor_ids and fig.node_id in neighbor_ids

    def test_projection_idempotent(self, cpr):
        graph = cpr_graph(cpr)
        nodes, edges = len(graph), graph.edge_count
        summary = upsert_procedure(graph, cpr)
        assert (len(graph), graph.edge_count) == (nodes, edges)
        assert summary == upsert_procedure(graph, cpr)

    def test_referenced_figure_gets_back_edge(self, cpr):
        graph = cpr_graph(cpr)
        edges = graph.edges_of(figure_node_id("iss-cpr", 1))
        kinds = {e.kind for e in edges}
        assert kinds == {EdgeKind.HAS_FIGURE, EdgeKind.REFERENCES}


class TestLinkedInfoBlock:
    def test_contains_exact_metadata_line(self, cpr):
        block = linked_info_block(cpr_graph(cpr), "iss-cpr")
        assert "Last update: 09 April 2015" in block.splitlines()

    def test_no_linked_nodes(self):
        graph = KnowledgeGraph()
        graph.add_node(Node(doc_node_id("lonely"), NodeKind.PROCEDURE_DOC))
        assert linked_info_block(graph, "lonely") == ""

    def test_unknown_procedure(self, cpr):
        with pytest.raises(UnknownProcedure):
            linked_info_block(cpr_graph(cpr), "missing")

    def test_two_metadata_nodes_stable_order(self):
        graph = KnowledgeGraph()
        doc = graph.add_node(Node(doc_node_id("p"), NodeKind.PROCEDURE_DOC))
        graph.add_node(Node("metadata:p-a", NodeKind.METADATA, (("Alpha", "1"),)))
        graph.add_node(Node("metadata:p-b", NodeKind.METADATA, (("Beta", "2"),)))
        graph.add_edge(Edge(EdgeKind.HAS_METADATA, doc, "metadata:p-a"))
        graph.add_edge(Edge(EdgeKind.HAS_METADATA, doc, "metadata:p-b"))
        assert linked_info_block(graph, "p") == "Alpha: 1\nBeta: 2"
        assert linked_info_block(graph, "p") == linked_info_block(graph, "p")

    def test_matches_reachability_oracle(self, procedures, tmp_path):
        graph = KnowledgeGraph()
        for proc in procedures:
            upsert_procedure(graph, proc)
        path = tmp_path / "graph.jsonl"
        graph.save(path)
        dump = path.read_text(encoding="utf-8")
        for proc in procedures:
            doc = doc_node_id(proc.procedure_id)
            expected_lines = [
                f"{k}: {v}"
                for _nid, attrs in sorted(ref_one_hop(dump, doc).items())
                for k, v in attrs
            ]
            assert linked_info_block(graph, proc.procedure_id) == "\n".join(expected_lines)


class TestPersistence:
    def test_round_trip(self, procedures, tmp_path):
        graph = KnowledgeGraph()
        for proc in procedures:
            upsert_procedure(graph, proc)
        path = tmp_path / "graph.jsonl"
        graph.save(path)
        loaded = KnowledgeGraph.load(path)
        assert loaded.nodes() == graph.nodes()
        assert loaded.edges() == graph.edges()

    def test_no_temp_file_left(self, cpr, tmp_path):
        graph = cpr_graph(cpr)
        path = tmp_path / "graph.jsonl"
        graph.save(path)
        assert [p.name for p in tmp_path.iterdir()] == ["graph.jsonl"]

    def test_line_shapes(self, cpr, tmp_path):
        import json

        graph = cpr_graph(cpr)
        path = tmp_path / "graph.jsonl"
        graph.save(path)
        records = [json.loads(line) for line in path.read_text().splitlines()]
        assert all(("node" in r) ^ ("edge" in r) for r in records)
        # nodes are written before edges so loads never dangle
        kinds = ["node" if "node" in r else "edge" for r in records]
        assert kinds == sorted(kinds, key=lambda k: k != "node")

    def test_empty_graph_save_load(self, tmp_path):
        graph = KnowledgeGraph()
        path = tmp_path / "graph.jsonl"
        graph.save(path)
        assert len(KnowledgeGraph.load(path)) == 0
