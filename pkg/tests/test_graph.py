import itertools

import pytest
from hypothesis import given, settings, strategies as st

from gramforge.graph import (Kind, build_graph, enumerate_k_paths, feedback_arc_set, is_acyclic,
                             mark_indirection, to_dot)
from gramforge.grammar import parse_grammar

from conftest import graph_of

# Hand-numbered expr graph: rule order, then pre-order inside each rule.
EXPR_KINDS = (
    "head", "head", "alt", "concat", "terminal", "head", "alt", "terminal", "concat", "star",
    "head", "alt", *["terminal"] * 9, "head", "alt", "terminal",
)
# Shallowest completion height of every node, worked out bottom-up by hand.
EXPR_MIN_DEPTHS = (6, 5, 4, 6, 1, 3, 2, 1, 4, 1, 3, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 3, 2, 1)


def test_expr_node_numbering(graphs):
    g = graphs["expr"]
    assert tuple(n.kind.value for n in g.nodes) == EXPR_KINDS
    assert g.heads == {"start": 0, "expr": 1, "number": 5, "non_zero": 10, "digit": 21}
    assert [g.nodes[i].literal for i in range(12, 21)] == [str(d).encode() for d in range(1, 10)]
    assert g.start_node == 0


def test_expr_rule_subgraph(graphs):
    g = graphs["expr"]
    alt = g.children(1)[0]
    assert g.nodes[alt].kind is Kind.ALT and g.nodes[alt].arity == 2
    seq = g.children(alt)[0]
    assert g.nodes[seq].kind is Kind.CONCAT
    assert [g.nodes[c].describe() for c in g.children(seq)] == ["<number>", '"+"', "<expr>"]


def test_expr_indirect_edges(graphs):
    marked = {(e.src, e.dst, e.label) for e in graphs["expr"].indirect_edges}
    assert marked == {(3, 1, "2"), (9, 21, "0..")}


def test_expr_min_depths(graphs):
    assert graphs["expr"].min_depths == EXPR_MIN_DEPTHS


def test_single_terminal_rule():
    g = graph_of('<a> ::= "x"')
    assert [n.kind for n in g.nodes] == [Kind.HEAD, Kind.TERMINAL]
    assert [(e.src, e.dst) for e in g.edges] == [(0, 1)]
    assert g.indirect_edges == []


def test_acyclic_alternation_marks_nothing():
    assert graph_of('<a> ::= "x" | "y"').indirect_edges == []


def test_mutual_recursion_marks_one_edge():
    g = graph_of('<a> ::= <b> "x" | "y"\n<b> ::= <a>')
    marked = g.indirect_edges
    assert len(marked) == 1
    assert not g.nodes[marked[0].src].kind.is_repetition
    rest = [(e.src, e.dst) for e in g.edges if not e.indirect]
    assert is_acyclic(len(g.nodes), rest)
    assert graph_of('<a> ::= <b> "x" | "y"\n<b> ::= <a>').edges == g.edges  # deterministic


def test_edge_labels_are_contiguous(graphs):
    for g in graphs.values():
        for n in g.nodes:
            edges = g.child_edges(n.id)
            if n.kind in (Kind.ALT, Kind.CONCAT):
                assert [e.index for e in edges] == list(range(n.arity))
            elif n.kind.is_repetition or n.kind is Kind.HEAD:
                assert len(edges) == 1
            if n.kind.is_repetition:
                assert edges[0].indirect


def test_repetition_labels(graphs):
    g = graph_of('<a> ::= "x"{2,5} "y"+')
    assert sorted(e.label for e in g.edges if e.indirect) == ["1..", "2..5"]


def test_k_paths_single_rule():
    g = graph_of('<a> ::= "x"')
    assert enumerate_k_paths(g, 2) == {(0,), (1,), (0, 1)}


def test_expr_k_paths(graphs):
    g = graphs["expr"]
    assert enumerate_k_paths(g, 1) == {(n.id,) for n in g.nodes}
    pairs = {(e.src, e.dst) for e in g.edges}
    assert enumerate_k_paths(g, 2) == {(n.id,) for n in g.nodes} | pairs


def _brute_walks(g, k):
    succ = {(e.src, e.dst) for e in g.edges}
    out = set()
    for n in range(1, k + 1):
        for seq in itertools.product(range(len(g.nodes)), repeat=n):
            if len(set(seq)) == n and all((a, b) in succ for a, b in zip(seq, seq[1:])):
                out.add(seq)
    return out


@pytest.mark.parametrize("k", [1, 2, 3])
def test_k_paths_match_brute_force(graphs, k):
    g = graphs["expr"]
    assert enumerate_k_paths(g, k) == _brute_walks(g, k)


def test_k_path_counts_are_monotone(graphs):
    for g in graphs.values():
        sizes = [len(enumerate_k_paths(g, k)) for k in range(1, 5)]
        assert sizes == sorted(sizes)
        assert enumerate_k_paths(g, 3) <= enumerate_k_paths(g, 4)


def test_dot_export_dashes_indirect_edges(graphs):
    dot = to_dot(graphs["expr"])
    assert dot.startswith("digraph")
    assert dot.count("dashed") == 2


def test_build_is_deterministic(graphs):
    for g in graphs.values():
        assert mark_indirection(build_graph(g.ast)) == g


# --- property tests ----------------------------------------------------------

edge_lists = st.integers(2, 9).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                                             max_size=30)))


@settings(max_examples=400, deadline=None)
@given(edge_lists)
def test_removing_feedback_arcs_leaves_a_dag(case):
    n, edges = case
    fas = feedback_arc_set(n, edges)
    assert is_acyclic(n, [e for i, e in enumerate(edges) if i not in fas])
    assert feedback_arc_set(n, edges) == fas


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 9).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 2), st.integers(1, n - 1))
                                             .filter(lambda e: e[0] < e[1]), max_size=30))))
def test_acyclic_inputs_need_no_feedback_arcs(case):
    n, edges = case
    assert feedback_arc_set(n, edges) == set()


rule_bodies = st.lists(
    st.lists(st.lists(st.sampled_from(['"t"', "<r0>", "<r1>", "<r2>", "<r3>", '<r1>*', '("u" <r2>)?']),
                      min_size=1, max_size=3).map(" ".join), min_size=1, max_size=3).map(" | ".join),
    min_size=4, max_size=4)


@settings(max_examples=200, deadline=None)
@given(rule_bodies)
def test_any_grammar_has_acyclic_direct_subgraph(bodies):
    text = "\n".join(f"<r{i}> ::= {b}" for i, b in enumerate(bodies))
    g = mark_indirection(build_graph(parse_grammar(text)))
    assert is_acyclic(len(g.nodes), [(e.src, e.dst) for e in g.edges if not e.indirect])
    for e in g.edges:
        if g.nodes[e.src].kind.is_repetition:
            assert e.indirect
