import importlib.util
import json

import pytest
from hypothesis import given, settings, strategies as st

from gramforge import RandomSampler, load_static
from gramforge.codegen import emit_module, emit_opaque, emit_types, load_module, manifest, plan_emit
from gramforge.graph import Kind
from gramforge.runtime import Break, Cell
from gramforge.static import load_transpiled
from gramforge.visitors import iter_nodes

from conftest import CORPUS, EXPR_12_PLUS_3, graph_of, scripted


def test_digit_is_a_two_variant_union(static):
    mod = static["expr"].module
    assert mod.Digit_Alt_22.CHILD_TYPES == (mod.Digit_Terminal_23, mod.NonZero_Head_10)
    assert mod.Digit_Head_21.CHILD_TYPES == (mod.Digit_Alt_22,)


def test_single_terminal_rule_types():
    b = load_static(graph_of('<a> ::= "x"'))
    mod = b.module
    assert mod.A_Terminal_1.LITERAL == b"x"
    assert mod.A_Head_0.CHILD_TYPES == (mod.A_Terminal_1,)
    tree = b.generate(RandomSampler(0))
    assert type(tree) is mod.A_Head_0 and tree.to_bytes() == b"x"


def test_recursive_csv_variant_sits_in_a_cell(static, graphs):
    g = graphs["csv"]
    lst = g.head("csv_string_list")
    seq = g.children(g.children(lst)[0])[1]
    edges = g.child_edges(seq)
    assert [g.nodes[e.dst].describe() for e in edges] == ["<raw_field>", '";"', "<csv_string_list>"]
    assert [e.indirect for e in edges] == [False, False, True]
    cls = static["csv"].node_class(seq)
    assert "_child_2" in cls.__slots__ and "child_2" not in cls.__slots__
    assert isinstance(cls.child_2, property)
    tree = scripted(static["csv"], [1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 1, 0, 0])  # "a;b\n"
    assert tree.to_bytes() == b"a;b\n"
    node = next(n for _, n in iter_nodes(tree) if type(n) is cls)
    assert isinstance(node._child_2, Cell)
    assert type(node.child_2) is static["csv"].node_class(lst)
    assert node.children()[2] is node.child_2


@pytest.mark.parametrize("name", CORPUS)
def test_indirect_children_only_through_accessors(name, graphs, static):
    g = graphs[name]
    for p in plan_emit(g).types:
        n = g.nodes[p.node_id]
        if n.kind.is_repetition:
            continue
        cls = static[name].node_class(p.node_id)
        for i, indirect in enumerate(p.indirect):
            if indirect:
                assert f"_child_{i}" in cls.__slots__
                assert isinstance(getattr(cls, f"child_{i}"), property)
            elif n.kind in (Kind.HEAD, Kind.CONCAT):
                assert f"child_{i}" in cls.__slots__


def test_opaque_union_covers_every_node(static, graphs):
    mod = static["expr"].module
    assert len(mod.Opaque.VARIANTS) == len(graphs["expr"].nodes) == 24
    assert len(mod.OpaqueMut.VARIANTS) == 24


def test_downcast(static):
    mod = static["expr"].module
    tree = scripted(static["expr"], EXPR_12_PLUS_3)
    digit = next(n for _, n in iter_nodes(tree) if type(n) is mod.Digit_Head_21)
    view = mod.upcast(digit)
    assert view.downcast(mod.Expr_Head_1) is None
    assert view.downcast(mod.Digit_Head_21) is digit
    assert mod.downcast(digit.opaque_mut(), mod.Digit_Head_21) is digit
    with pytest.raises(TypeError):
        mod.Opaque(object())


def test_plus_terminal_definition(static):
    mod = static["expr"].module
    d = mod.Expr_Terminal_4.INSTANCE.definition()
    assert d.kind is Kind.TERMINAL and d.literal == b"+"


class Recorder:
    def __init__(self):
        self.seen = []

    def visit(self, node, index):
        self.seen.append(index)
        return self


def test_visit_each_order(static):
    tree = scripted(static["expr"], EXPR_12_PLUS_3)
    seq = tree.child_0.child_0.value  # <start> -> <expr> -> alternation -> sequence
    assert seq.definition().kind is Kind.CONCAT
    r = Recorder()
    assert seq.visit_each(r) is r
    assert r.seen == [0, 1, 2]


def test_visit_each_on_empty_repetition(static):
    tree = scripted(static["expr"], [1, 1, 6, 0])  # "7"
    star = next(n for _, n in iter_nodes(tree) if n.definition().kind is Kind.STAR)
    state = Recorder()
    assert star.visit_each(state) is state and state.seen == []


def test_visit_each_stops_on_break(static):
    tree = scripted(static["expr"], [1, 1, 0, 3, 0, 0, 0])  # "1000"
    star = next(n for _, n in iter_nodes(tree) if n.definition().kind is Kind.STAR)

    class StopAtOne:
        def __init__(self):
            self.seen = []

        def visit(self, node, index):
            self.seen.append(index)
            return Break(index) if index == 1 else self

    v = StopAtOne()
    out = star.visit_each(v)
    assert isinstance(out, Break) and out.value == 1 and v.seen == [0, 1]


@pytest.mark.parametrize("name", CORPUS)
def test_emission_is_deterministic_and_compiles(name, graphs):
    g = graphs[name]
    src = emit_module(g)
    assert src == emit_module(g)
    compile(src, f"{name}_types.py", "exec")
    compile(emit_types(g), "types", "exec")
    assert emit_opaque(g) in src


def test_docs_quote_the_grammar(static):
    doc = static["expr"].module.Expr_Concat_3.__doc__
    assert "line 3" in doc and '<expr> ::= <number> "+" <expr> | <number>' in doc


def test_names_are_unique_for_clashing_rules():
    g = graph_of('<a_b> ::= <aB> | "x"\n<aB> ::= "y"')
    names = [p.name for p in plan_emit(g).types]
    assert len(set(names)) == len(names)


def test_manifest(graphs):
    m = manifest(graphs["expr"])
    assert m["grammar"] == "expr" and m["start"] == 0
    assert [t["name"] for t in m["types"][:4]] == ["Start_Head_0", "Expr_Head_1", "Expr_Alt_2", "Expr_Concat_3"]
    assert m["types"][3]["indirect_children"] == [2]
    json.dumps(m)


def test_transpiled_file_imports_and_generates(tmp_path, graphs):
    path = tmp_path / "expr_types.py"
    path.write_text(emit_module(graphs["expr"]))
    spec = importlib.util.spec_from_file_location("expr_types_direct", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    tree = mod.Start_Head_0.generate(RandomSampler(3))
    assert type(tree) is mod.Start_Head_0
    backend = load_transpiled(path)
    assert backend.serialize(backend.generate(RandomSampler(3))) == tree.to_bytes()


def test_module_cache(graphs):
    assert load_module(graphs["xml"]) is load_module(graphs["xml"])


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(CORPUS), st.integers(0, 2**32))
def test_opaque_round_trip(static, name, seed):
    mod = static[name].module
    from gramforge import DepthLimiter
    tree = static[name].generate(RandomSampler(seed), [DepthLimiter(16)])
    for _, node in iter_nodes(tree):
        assert mod.upcast(node).downcast(type(node)) is node
        assert mod.upcast_mut(node).downcast(type(node)) is node
