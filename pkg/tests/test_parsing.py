import pytest
from hypothesis import given, settings, strategies as st

from gramforge import DepthLimiter, RandomSampler
from gramforge.parsing import ParseError, Parser, accepts, parse
from gramforge.visitors import validate_tree

from conftest import CORPUS, graph_of
from oracles import EarleyRecognizer


@pytest.fixture(scope="module")
def earley(graphs):
    return {name: EarleyRecognizer(g.ast) for name, g in graphs.items()}


@pytest.mark.parametrize("text, ok", [(b"0", True), (b"12+3", True), (b"1+2+30", True), (b"01", False),
                                      (b"", False), (b"+1", False), (b"1+", False), (b"100", True)])
def test_expr_inputs(graphs, earley, text, ok):
    assert accepts(graphs["expr"], text) is ok
    assert earley["expr"].accepts(text) is ok


def test_parse_builds_a_valid_tree(graphs):
    tree = parse(graphs["expr"], b"12+3")
    assert tree.to_bytes() == b"12+3"
    validate_tree(tree, graphs["expr"])


def test_parse_rejects(graphs):
    with pytest.raises(ParseError):
        parse(graphs["expr"], b"1++2")


def test_empty_terminal_grammar():
    g = graph_of('<a> ::= "" "x"?')
    assert accepts(g, b"") and accepts(g, b"x") and not accepts(g, b"xx")


def _floor(g):
    return g.min_depths[g.start_node]


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(CORPUS), st.integers(0, 2**32))
def test_generated_inputs_round_trip(static, graphs, earley, name, seed):
    limit = DepthLimiter(_floor(graphs[name]) + 10)
    data = static[name].generate(RandomSampler(seed), [limit]).to_bytes()
    assert earley[name].accepts(data)
    tree = Parser(graphs[name]).parse(data)
    assert tree.to_bytes() == data
    validate_tree(tree, graphs[name])


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(CORPUS), st.integers(0, 2**32), st.data())
def test_agrees_with_earley_on_corrupted_inputs(static, graphs, earley, name, seed, data):
    limit = DepthLimiter(_floor(graphs[name]) + 8)
    src = bytearray(static[name].generate(RandomSampler(seed), [limit]).to_bytes())
    op = data.draw(st.sampled_from(["flip", "drop", "insert"]))
    pos = data.draw(st.integers(0, len(src)))
    byte = data.draw(st.sampled_from(b"0+;\n<>/ax(){}=1 "))
    if op == "flip" and pos < len(src):
        src[pos] = byte
    elif op == "drop" and pos < len(src):
        del src[pos]
    else:
        src.insert(pos, byte)
    assert accepts(graphs[name], bytes(src)) == earley[name].accepts(bytes(src))
