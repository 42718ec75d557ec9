import pytest
from hypothesis import given, settings, strategies as st

from gramforge import DepthLimiter, RandomSampler, load_static
from gramforge.coverage import GrammarMismatch, KPathTracker, kpath_cover, observed_chains
from gramforge.graph import enumerate_k_paths

from conftest import CORPUS, EXPR_0, graph_of, scripted
from oracles import brute_force_chains


def test_chains_of_zero(expr):
    tree = scripted(expr, EXPR_0)
    # <start> <expr> alt <number> alt "0": one straight line of six nodes
    assert observed_chains(tree, 2) == {(0,), (1,), (2,), (5,), (6,), (7,),
                                        (0, 1), (1, 2), (2, 5), (5, 6), (6, 7)}


def test_two_leaves_cover_everything():
    g = graph_of('<a> ::= "x" | "y"')
    b = load_static(g)
    s = RandomSampler(0)
    forest = []
    while {t.to_bytes() for t in forest} != {b"x", b"y"}:
        forest.append(b.generate(s))
    rep = kpath_cover(forest, g, 2)
    assert rep.percent == 100.0 and rep.missing() == []
    assert kpath_cover(forest[:1], g, 2).coverage < 1


def test_empty_forest(graphs):
    rep = kpath_cover([], graphs["expr"], 3)
    assert rep.coverage == 0.0 and len(rep.total) == len(enumerate_k_paths(graphs["expr"], 3))


def test_by_length(graphs, expr):
    rep = kpath_cover([scripted(expr, EXPR_0)], graphs["expr"], 2)
    assert rep.by_length() == {1: (6, 24), 2: (5, len(graphs["expr"].edges))}


def test_foreign_tree_rejected(graphs, static):
    tree = static["csv"].generate(RandomSampler(0), [DepthLimiter(20)])
    with pytest.raises(GrammarMismatch):
        kpath_cover([tree], graphs["expr"], 2)


def test_k_must_be_positive(expr):
    with pytest.raises(ValueError):
        observed_chains(scripted(expr, EXPR_0), 0)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(CORPUS), st.integers(0, 2**32), st.integers(1, 5))
def test_chains_match_brute_force(static, dynamic, name, seed, k):
    tree = static[name].generate(RandomSampler(seed), [DepthLimiter(18)])
    assert observed_chains(tree, k) == brute_force_chains(tree, k)
    dyn = dynamic[name].generate(RandomSampler(seed), [DepthLimiter(18)])
    assert observed_chains(dyn, k) == observed_chains(tree, k)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(CORPUS), st.lists(st.integers(0, 2**32), min_size=1, max_size=6), st.integers(1, 4))
def test_adding_trees_never_lowers_coverage(static, graphs, name, seeds, k):
    trees = [static[name].generate(RandomSampler(s), [DepthLimiter(18)]) for s in seeds]
    tracker = KPathTracker(graphs[name], k)
    last = 0.0
    for t in trees:
        tracker.add(t)
        cov = tracker.report().coverage
        assert cov >= last
        last = cov
    assert tracker.add(trees[0]) == 0  # a duplicate covers nothing new
    assert tracker.report().coverage == last == kpath_cover(trees, graphs[name], k).coverage
