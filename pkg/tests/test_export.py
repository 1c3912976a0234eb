import json

import networkx as nx

from misdx.canonical import CanonicalPair
from misdx.export import RunReport, write_dot, write_edge_table, write_graphml, write_node_table, write_report
from misdx.graph import build_graph

A, B, C = "C0000001", "C0000002", "C0000003"


def graph(*edges, labels=None):
    return build_graph([CanonicalPair(s, d, "1", s == d) for s, d in edges], labels)


def test_edge_table_rows_and_rounding():
    g = graph((A, B), (A, C), (A, C), labels={A: "Alpha", B: "Beta", C: "Gamma"})
    lines = write_edge_table(g).splitlines()
    assert lines[0].split("\t") == ["source_cui", "source_label", "dest_cui", "dest_label",
                                    "pair_count", "source_frequency", "weight"]
    assert lines[1:] == [f"{A}\tAlpha\t{C}\tGamma\t2\t3\t0.6667", f"{A}\tAlpha\t{B}\tBeta\t1\t3\t0.3333"]
    assert write_edge_table(g) == write_edge_table(graph((A, C), (A, B), (A, C),
                                                         labels={A: "Alpha", B: "Beta", C: "Gamma"}))


def test_empty_tables_are_header_only():
    assert len(write_edge_table(graph()).splitlines()) == 1
    assert len(write_node_table(graph()).splitlines()) == 1


def test_dot_edges_and_quoting():
    dot = write_dot(graph((A, B), labels={A: 'say "hi" \\ there', B: "b"}))
    assert f'"{A}" -> "{B}" [weight=1.0000, pair_count=1];' in dot
    assert 'label="say \\"hi\\" \\\\ there"' in dot
    assert f'"{B}" [label="b", out_degree_centrality=0.0000];' in dot


def test_graphml_parses_with_networkx():
    g = graph((A, B), (A, B), (A, C), (B, C), labels={A: "A & <co>", B: "Beta", C: "Gamma"})
    parsed = nx.parse_graphml(write_graphml(g))
    assert parsed.is_directed()
    assert sorted(parsed.nodes) == [A, B, C]
    assert parsed.nodes[A]["label"] == "A & <co>"
    assert parsed.nodes[A]["out_degree_centrality"] == 1.0
    assert parsed.nodes[C]["out_degree_centrality"] == 0.0  # sink still present
    assert parsed.edges[A, B]["weight"] == 0.6667
    assert parsed.edges[A, B]["pair_count"] == 2
    assert write_graphml(g) == write_graphml(g)


def test_report_json_stable_and_complete():
    empty = json.loads(write_report(RunReport()))
    assert all(v == 0 for k, v in empty.items() if isinstance(v, int))
    assert empty["rejection_breakdown"] == {"zero_matches": 0, "one_match": 0,
                                            "too_many_matches": 0, "both_same_side": 0}
    assert list(empty)[:3] == ["files_read", "citations_scanned", "records_skipped_malformed"]
    RunReport().check()
