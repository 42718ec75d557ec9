import json

import pytest
from hypothesis import given, settings, strategies as st

from gramforge import DepthExceeded, DepthLimiter, InvalidPath, RandomSampler, load_dynamic
from gramforge.corpus import corpus_path
from gramforge.evolution import (CardinalityEqK, CardinalityEqual, ConstraintError, CountBound, DimensionMismatch,
                                 FunctionConstraint, NoCandidate, NodeGoal, TreeIndex, UnknownConstraint,
                                 UnknownSelector, check, crossover, crowding_distance, fandango_ga,
                                 load_constraint_file, make_constraint, mutate, nondominated_sort, nsga2,
                                 parse_constraint_spec, registered_constraints)
from gramforge.parsing import parse
from gramforge.sampling import ScriptedSampler
from gramforge.visitors import count_fandango_nodes, resolve_path, validate_tree

from conftest import EXPR_1_PLUS_2, EXPR_3, EXPR_12_PLUS_3, scripted
from oracles import EarleyRecognizer, brute_force_fronts

SECOND_NUMBER = (0, 0, 0, 2, 0, 0)  # "12+3": <start> <expr> alt seq <expr> alt <number>
FIRST_NUMBER = (0, 0, 0, 0)


def csv_rules():
    return [CardinalityEqual("csv_record", "raw_field")]


# --- operators -------------------------------------------------------------------------

def test_mutate_second_number(expr):
    tree = scripted(expr, EXPR_12_PLUS_3)
    assert resolve_path(tree, SECOND_NUMBER).to_bytes() == b"3"
    s = ScriptedSampler([1, 6, 0])  # <number> -> <non_zero> "7", no further digits
    out = mutate(tree, SECOND_NUMBER, expr.engine(s))
    assert out is tree and tree.to_bytes() == b"12+7" and s.exhausted


def test_mutate_root_returns_new_tree(expr):
    tree = scripted(expr, EXPR_12_PLUS_3)
    out = mutate(tree, (), expr.engine(ScriptedSampler([1, 0])))
    assert out.to_bytes() == b"0" and tree.to_bytes() == b"12+3"


def test_mutants_reparse(static, dynamic, graphs):
    g = graphs["expr"]
    earley = EarleyRecognizer(g.ast)
    rng = RandomSampler(99)
    for backend in (static["expr"], dynamic["expr"]):
        ctx = backend.engine(rng, [DepthLimiter(14)])
        for _ in range(5000):
            tree = ctx.generate()
            paths = [p for p in _all_paths(tree) if len(p) + g.min_depths[resolve_path(tree, p).ID] <= 14]
            path = paths[rng.randrange(len(paths))]
            tree = mutate(tree, path, ctx)
            assert earley.accepts(tree.to_bytes())
        validate_tree(tree, g)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(["expr", "csv", "xml", "minic"]), st.integers(0, 2**32), st.integers(0, 10**6),
       st.integers(8, 24))
def test_mutate_agrees_across_backends(static, dynamic, name, seed, pick, limit):
    outcomes = []
    for backend in (static[name], dynamic[name]):
        tree = backend.generate(RandomSampler(seed), [DepthLimiter(24)])
        paths = _all_paths(tree)
        path = paths[pick % len(paths)]
        s = RandomSampler(seed + 1)
        try:
            out = mutate(tree, path, backend.engine(s, [DepthLimiter(limit)])).to_bytes()
        except DepthExceeded:
            out = None
        outcomes.append((out, tree.to_bytes() if out is None else None, s.sample_alt(1000, 0)))
    assert outcomes[0] == outcomes[1]


@pytest.mark.parametrize("path, index, depth", [((0, 0, 0, 5), 5, 3), ((0, 0, 0, 0, -1), -1, 4),
                                                ((0, 3), 3, 1), ((0, 0, 0, 1, 0), 0, 4)])
def test_mutate_rejects_bad_paths(expr, path, index, depth):
    tree = scripted(expr, EXPR_12_PLUS_3)
    s = ScriptedSampler([])
    with pytest.raises(InvalidPath) as exc:
        mutate(tree, path, expr.engine(s))
    assert (exc.value.index, exc.value.depth) == (index, depth)
    assert tree.to_bytes() == b"12+3" and s.pos == 0


def _all_paths(tree):
    from gramforge.visitors import collect_paths
    return collect_paths(tree)


def test_crossover_swaps_numbers(expr):
    a, b = scripted(expr, EXPR_1_PLUS_2), scripted(expr, EXPR_3)
    assert (a.to_bytes(), b.to_bytes()) == (b"1+2", b"3")
    x, y = crossover(a, b, FIRST_NUMBER, RandomSampler(0))
    assert (x.to_bytes(), y.to_bytes()) == (b"3+2", b"1")


def test_crossover_without_partner_leaves_parents_alone(expr):
    a, b = scripted(expr, EXPR_1_PLUS_2), scripted(expr, EXPR_3)
    plus_seq = (0, 0, 0)
    with pytest.raises(NoCandidate):
        crossover(a, b, plus_seq, RandomSampler(0))
    assert (a.to_bytes(), b.to_bytes()) == (b"1+2", b"3")


def test_crossover_at_root(expr):
    a, b = scripted(expr, EXPR_1_PLUS_2), scripted(expr, EXPR_3)
    x, y = crossover(a, b, (), RandomSampler(0))
    assert x is b and y is a


# --- constraints -----------------------------------------------------------------------

def test_equal_field_counts(graphs):
    g = graphs["csv"]
    (ok,) = check(parse(g, b"a;b\nc;x\n"), csv_rules(), g)
    assert ok.score == 1.0 and ok.violations == ()
    (bad,) = check(parse(g, b"a;b\nc\n"), csv_rules(), g)
    assert bad.score == 0.5 and len(bad.violations) == 1


def test_exactly_k_fields(graphs):
    g = graphs["csv"]
    rule = CardinalityEqK("csv_record", "raw_field", 3)
    assert rule(parse(g, b"a;b;c\n"), g).score == 1.0
    r = rule(parse(g, b"a;b;c\nx\n"), g)
    assert r.score == pytest.approx((1 + 1 / 3) / 2) and len(r.violations) == 1


def test_single_record_is_trivially_equal(graphs):
    g = graphs["csv"]
    assert CardinalityEqual("csv_record", "raw_field")(parse(g, b"a;b\n"), g).score == 1.0


def test_node_goal(graphs):
    # each "1" term is <expr> <number> <non_zero> "1" plus a "+" or <start>: 5 nodes
    tree = parse(graphs["expr"], b"+".join([b"1"] * 10))
    assert count_fandango_nodes(tree) == 50
    assert NodeGoal(500)(tree, graphs["expr"]).score == pytest.approx(0.1)
    assert NodeGoal(50)(tree, graphs["expr"]).score == 1.0


def test_count_bound(graphs):
    g = graphs["expr"]
    rule = CountBound("number", 3, 5)
    assert rule(parse(g, b"1+2+3"), g).score == 1.0
    assert rule(parse(g, b"1+2"), g).score == 0.5
    assert rule(parse(g, b"1+1+1+1+1+1+1"), g).score == 1 / 3


def test_empty_constraint_list(graphs):
    assert check(parse(graphs["expr"], b"1"), [], graphs["expr"]) == []


def test_check_does_not_touch_the_tree(graphs):
    g = graphs["csv"]
    tree = parse(g, b"a;b\nc\n")
    before = tree.clone()
    check(tree, csv_rules() + [NodeGoal(10)], g)
    check(tree, csv_rules() + [NodeGoal(10)], g)
    assert tree.to_bytes() == before.to_bytes()
    assert [n.ID for n in TreeIndex(tree, g).nodes] == [n.ID for n in TreeIndex(before, g).nodes]


def test_raising_constraint_is_wrapped(graphs):
    boom = FunctionConstraint(lambda index: 1 / 0, "boom")
    with pytest.raises(ConstraintError) as exc:
        check(parse(graphs["expr"], b"1"), [NodeGoal(1), boom], graphs["expr"])
    assert exc.value.index == 1 and isinstance(exc.value.cause, ZeroDivisionError)


def test_unknown_selector(graphs):
    with pytest.raises(UnknownSelector):
        CardinalityEqual("row", "cell").prepare(graphs["csv"])


# --- constraint files ------------------------------------------------------------------

def test_bundled_constraint_files_load():
    for name in ("expr", "csv", "xml", "minic"):
        spec = load_constraint_file(corpus_path(name).with_name(f"{name}_constraints.toml"))
        assert spec.constraints and spec.max_depth


def test_registry():
    kinds = registered_constraints()
    for k in ("cardinality_equal", "cardinality_eq_k", "node_goal", "count_bound",
              "minic_declared_before_use", "xml_tags_match"):
        assert k in kinds
    with pytest.raises(UnknownConstraint):
        make_constraint("no_such_kind")


def test_spec_parsing(tmp_path):
    spec = parse_constraint_spec({"constraint": [{"kind": "node_goal", "n": 5}], "flatten": ["digit"]})
    assert spec.constraints == [NodeGoal(5)] and spec.flatten == ["digit"] and spec.max_depth is None
    with pytest.raises(ValueError):
        parse_constraint_spec({"constraint": [], "bogus": 1})
    with pytest.raises(ValueError):
        parse_constraint_spec({"constraint": [{"n": 5}]})
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"constraints": [{"kind": "gramforge.evolution:NodeGoal", "n": 3}]}))
    assert load_constraint_file(p).constraints == [NodeGoal(3)]


# --- Pareto machinery ------------------------------------------------------------------

vectors = st.integers(1, 4).flatmap(
    lambda m: st.lists(st.tuples(*[st.sampled_from([0.0, 0.25, 0.5, 1.0])] * m), max_size=25))


@settings(max_examples=400, deadline=None)
@given(vectors)
def test_fronts_match_brute_force(objs):
    assert [set(f) for f in nondominated_sort(objs)] == brute_force_fronts(objs)


def test_mixed_dimensions_rejected():
    with pytest.raises(DimensionMismatch):
        nondominated_sort([(1.0, 0.0), (1.0,)])


def test_mutually_non_dominated_points():
    assert nondominated_sort([(1, 0), (0, 1), (0.5, 0.5)]) == [[0, 1, 2]]
    assert nondominated_sort([(1, 1), (0, 1), (0, 0)]) == [[0], [1], [2]]


def test_crowding_boundaries():
    d = crowding_distance([(0, 1), (0.5, 0.5), (1, 0), (0.25, 0.75)], [0, 1, 2, 3])
    assert d[0] == d[2] == float("inf")
    assert d[1] == pytest.approx(0.75 * 2) and d[3] == pytest.approx(0.5 * 2)


# --- search loops ----------------------------------------------------------------------

def _share(digit):
    def score(index):
        t = index.text(0)
        digits = [c for c in t if c != ord("+")]
        return sum(c == digit for c in digits) / len(digits), ((),)
    return score


def test_conflicting_objectives_keep_a_spread(static):
    rules = [FunctionConstraint(_share(ord("1")), "ones"), FunctionConstraint(_share(ord("2")), "twos")]
    res = nsga2(static["expr"], rules, population=100, iterations=15, seed=1, max_depth=12)
    front = {ind.scores for ind in res.population
             if not any(all(a >= b for a, b in zip(o.scores, ind.scores)) and o.scores != ind.scores
                        for o in res.population)}
    assert len(front) >= 3
    assert all(len(row["front_sizes"]) >= 1 for row in res.history)


def test_custom_niching_is_used(static):
    calls = []

    def reverse(objs, front):
        calls.append(len(front))
        return sorted(front, reverse=True)

    rules = [FunctionConstraint(_share(ord("1")), "ones"), FunctionConstraint(_share(ord("2")), "twos")]
    nsga2(static["expr"], rules, population=20, iterations=3, seed=2, max_depth=10, niching=reverse)
    assert calls


def test_ga_best_never_drops(static):
    seen = []
    res = fandango_ga(static["csv"], csv_rules() + [CardinalityEqK("csv_record", "raw_field", 3)],
                      population=30, iterations=15, seed=4, max_depth=32, stop_when_satisfied=False,
                      on_generation=lambda gen, pop: seen.append(gen))
    best = [row["best_fitness"] for row in res.history]
    assert best == sorted(best)
    assert seen == list(range(16)) and res.generations == 15


def test_ga_argument_checks(static):
    with pytest.raises(ValueError):
        fandango_ga(static["expr"], [], population=10, elites=2, candidates=5)
    with pytest.raises(ValueError):
        fandango_ga(static["expr"], [], population=10, elites=11)


@pytest.mark.parametrize("algo", [fandango_ga, nsga2])
def test_no_constraints_means_nothing_to_do(static, algo):
    res = algo(static["expr"], [], population=12, seed=0, max_depth=10)
    assert res.generations == 0 and len(res.population) == 12 and res.satisfied


def test_csv_search_finds_three_by_three(static, graphs):
    spec = load_constraint_file(corpus_path("csv").with_name("csv_constraints.toml"))
    res = nsga2(static["csv"], spec.constraints, population=60, iterations=200, seed=3,
                max_depth=spec.max_depth)
    assert res.satisfied and res.solutions
    for text in res.solutions:
        tree = parse(graphs["csv"], text)
        assert all(r.score == 1.0 for r in check(tree, spec.constraints, graphs["csv"]))


def test_dynamic_backend_evolves_too(graphs):
    res = fandango_ga(load_dynamic(graphs["expr"]), [CountBound("number", 3, 5)], population=20,
                      iterations=50, seed=5, max_depth=16)
    assert res.satisfied


@pytest.mark.parametrize("text, tags, attrs", [
    (b"<ab></ab>", 1.0, 1.0),
    (b"<ab></ba>", 0.0, 1.0),
    (b'<a b="1" b="0"/>', 1.0, 0.5),
    (b'<a b="1" i="0"><p/></a>', 1.0, 1.0),
])
def test_xml_rules(graphs, text, tags, attrs):
    g = graphs["xml"]
    rules = [make_constraint("xml_tags_match"), make_constraint("xml_unique_attributes")]
    for r in rules:
        r.prepare(g)
    assert [r.score for r in check(parse(g, text), rules, g)] == [tags, attrs]


def test_registered_rules_check_their_grammar(graphs):
    with pytest.raises(UnknownSelector):
        make_constraint("xml_tags_match").prepare(graphs["csv"])
