import pytest

from gramforge import DepthLimiter, Kind, RandomSampler, load_dynamic
from gramforge.dynamic import (ConcatChildren, DynNode, OptionalChild, RefChild, RepChildren, TerminalLeaf,
                               VariantChoice)
from gramforge.visitors import iter_nodes, validate_tree

from conftest import CORPUS, graph_of

PAYLOADS = {
    Kind.TERMINAL: TerminalLeaf, Kind.HEAD: RefChild, Kind.ALT: VariantChoice, Kind.CONCAT: ConcatChildren,
    Kind.STAR: RepChildren, Kind.PLUS: RepChildren, Kind.RANGE: RepChildren, Kind.OPTION: OptionalChild,
}


def shape(tree):
    return [(p, n.definition().id) for p, n in iter_nodes(tree)]


def test_csv_backends_agree_on_a_thousand_seeds(static, dynamic):
    gens = [DepthLimiter(32)]
    for seed in range(1000):
        a = static["csv"].generate(RandomSampler(seed), gens)
        b = dynamic["csv"].generate(RandomSampler(seed), gens)
        assert a.to_bytes() == b.to_bytes()
        assert shape(a) == shape(b)


@pytest.mark.parametrize("name", CORPUS)
def test_payload_matches_node_kind(name, dynamic, graphs):
    s = RandomSampler(8)
    for _ in range(50):
        tree = dynamic[name].generate(s, [DepthLimiter(20)])
        validate_tree(tree, graphs[name])
        for _, node in iter_nodes(tree):
            d = node.definition()
            assert type(node.payload) is PAYLOADS[d.kind]
            if d.kind is Kind.ALT:
                assert node.payload.child.definition().id == graphs[name].children(d.id)[node.payload.index]
            if d.kind is Kind.TERMINAL:
                assert node.payload.literal == d.literal


def test_single_terminal_is_one_leaf():
    tree = load_dynamic(graph_of('<a> ::= "x"')).generate(RandomSampler(0))
    assert tree.to_bytes() == b"x"
    (leaf,) = tree.children()
    assert leaf.children() == () and leaf.payload == TerminalLeaf(b"x")


def test_empty_terminal_serializes_to_nothing():
    assert load_dynamic(graph_of('<a> ::= ""')).generate(RandomSampler(0)).to_bytes() == b""


def test_clone_is_deep(dynamic):
    tree = dynamic["expr"].generate(RandomSampler(4), [DepthLimiter(12)])
    before = tree.to_bytes()
    copy = tree.clone()
    assert copy.to_bytes() == before and copy is not tree
    number = dynamic["expr"].generate(RandomSampler(0), node_id=5)
    head = copy.children()[0]
    head.set_child(0, DynNode(head.children()[0].node, VariantChoice(1, number)))
    assert copy.to_bytes() == number.to_bytes()
    assert tree.to_bytes() == before


def test_set_child_rejects_bad_index(dynamic):
    tree = dynamic["expr"].generate(RandomSampler(0))
    with pytest.raises(IndexError):
        tree.set_child(1, tree.children()[0])
    leaf = next(n for _, n in iter_nodes(tree) if n.definition().kind is Kind.TERMINAL)
    with pytest.raises(IndexError):
        leaf.set_child(0, tree)
