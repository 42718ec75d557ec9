"""Constraints over derivation trees and their graded scores.

A constraint maps a tree to a score in ``[0, 1]`` (1 means satisfied) and a
list of violation paths: the subtrees whose regeneration is most likely to
help.  Scores are shaped so that nearer misses score higher:

* count equality: ``1 / (1 + |a - b|)``
* lower thresholds: ``min(actual / target, 1)``
* predicates: 0 or 1
* constraints over many instances average the per-instance scores.
"""

from __future__ import annotations

import importlib
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

from ..graph import GrammarGraph, Kind

__all__ = ["TreeIndex", "Constraint", "ConstraintResult", "ConstraintError", "UnknownSelector",
           "UnknownConstraint", "CardinalityEqual", "CardinalityEqK", "NodeGoal", "CountBound",
           "FunctionConstraint", "register_constraint", "make_constraint", "registered_constraints",
           "check", "count_score"]

Path = tuple[int, ...]


class UnknownSelector(KeyError):
    def __init__(self, rule: str):
        super().__init__(f"no rule <{rule}> in the grammar")
        self.rule = rule


class UnknownConstraint(KeyError):
    pass


class ConstraintError(RuntimeError):
    """A constraint raised while evaluating; ``index`` is its position in the list."""

    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"constraint {index} failed: {cause!r}")
        self.index = index
        self.cause = cause


class TreeIndex:
    """Pre-order table of one tree, built once and shared by all constraints.

    Entry ``i`` is the ``i``-th node in pre-order; its subtree spans entries
    ``i .. end[i] - 1``.
    """

    __slots__ = ("tree", "graph", "nodes", "ids", "parent", "slot", "end", "_by_id", "_text")

    def __init__(self, tree, graph: GrammarGraph):
        self.tree = tree
        self.graph = graph
        nodes: list = []
        ids: list[int] = []
        parent: list[int] = []
        slot: list[int] = []
        end: list[int] = []

        def walk(node, p, i):
            k = len(nodes)
            nodes.append(node)
            ids.append(node.ID)
            parent.append(p)
            slot.append(i)
            end.append(0)
            for j, c in enumerate(node.children()):
                walk(c, k, j)
            end[k] = len(nodes)

        walk(tree, -1, 0)
        self.nodes, self.ids, self.parent, self.slot, self.end = nodes, ids, parent, slot, end
        self._by_id: dict[int, list[int]] | None = None
        self._text: dict[int, bytes] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def by_id(self) -> dict[int, list[int]]:
        if self._by_id is None:
            d: dict[int, list[int]] = {}
            for i, nid in enumerate(self.ids):
                d.setdefault(nid, []).append(i)
            self._by_id = d
        return self._by_id

    def head_id(self, rule: str) -> int:
        try:
            return self.graph.heads[rule]
        except KeyError:
            raise UnknownSelector(rule) from None

    def instances(self, rule: str) -> list[int]:
        return self.by_id.get(self.head_id(rule), [])

    def descendants(self, i: int, rule: str) -> list[int]:
        """Entries strictly inside subtree ``i`` that are instances of ``rule``."""
        lst = self.by_id.get(self.head_id(rule), [])
        return lst[bisect_right(lst, i):bisect_left(lst, self.end[i])]

    def count_within(self, i: int, rule: str) -> int:
        lst = self.by_id.get(self.head_id(rule), [])
        return bisect_left(lst, self.end[i]) - bisect_right(lst, i)

    def path(self, i: int) -> Path:
        out = []
        while i > 0:
            out.append(self.slot[i])
            i = self.parent[i]
        return tuple(reversed(out))

    def text(self, i: int) -> bytes:
        t = self._text.get(i)
        if t is None:
            out: list[bytes] = []
            self.nodes[i]._w(out)
            t = self._text[i] = b"".join(out)
        return t

    def first_child_instance(self, i: int, rule: str) -> int | None:
        d = self.descendants(i, rule)
        return d[0] if d else None

    def fandango_size(self) -> int:
        nodes = self.graph.nodes
        return sum(1 for nid in self.ids if nodes[nid].kind in (Kind.HEAD, Kind.TERMINAL))


@dataclass(frozen=True)
class ConstraintResult:
    score: float
    violations: tuple[Path, ...] = ()

    @property
    def satisfied(self) -> bool:
        return self.score >= 1.0


def count_score(actual: int, target: int) -> float:
    return 1.0 / (1.0 + abs(actual - target))


class Constraint:
    """Base class; subclasses implement :meth:`evaluate`."""

    name = "constraint"

    def prepare(self, graph: GrammarGraph) -> None:
        """Validate against ``graph`` before any evaluation (raises UnknownSelector)."""

    def evaluate(self, index: TreeIndex) -> ConstraintResult:
        raise NotImplementedError

    def __call__(self, tree, graph: GrammarGraph) -> ConstraintResult:
        return self.evaluate(TreeIndex(tree, graph))


def _require(graph: GrammarGraph, *rules: str) -> None:
    for r in rules:
        if r not in graph.heads:
            raise UnknownSelector(r)


@dataclass
class CardinalityEqual(Constraint):
    """All ``scope`` instances contain the same number of ``selector`` instances."""

    scope: str
    selector: str
    name: str = field(default="cardinality_equal", compare=False)

    def prepare(self, graph):
        _require(graph, self.scope, self.selector)

    def evaluate(self, index):
        scopes = index.instances(self.scope)
        counts = [index.count_within(i, self.selector) for i in scopes]
        if len(counts) < 2:
            return ConstraintResult(1.0)
        pairs = list(combinations(counts, 2))
        score = sum(count_score(a, b) for a, b in pairs) / len(pairs)
        if score >= 1.0:
            return ConstraintResult(1.0)
        modal = Counter(counts).most_common(1)[0][0]
        bad = tuple(index.path(i) for i, c in zip(scopes, counts) if c != modal)
        return ConstraintResult(score, bad)


@dataclass
class CardinalityEqK(Constraint):
    """Every ``scope`` instance contains exactly ``k`` ``selector`` instances."""

    scope: str
    selector: str
    k: int
    name: str = field(default="cardinality_eq_k", compare=False)

    def prepare(self, graph):
        _require(graph, self.scope, self.selector)

    def evaluate(self, index):
        scopes = index.instances(self.scope)
        if not scopes:
            return ConstraintResult(1.0)
        counts = [index.count_within(i, self.selector) for i in scopes]
        score = sum(count_score(c, self.k) for c in counts) / len(counts)
        bad = tuple(index.path(i) for i, c in zip(scopes, counts) if c != self.k)
        return ConstraintResult(score, bad)


@dataclass
class NodeGoal(Constraint):
    """The tree has at least ``n`` nonterminal plus terminal nodes."""

    n: int
    name: str = field(default="node_goal", compare=False)

    def evaluate(self, index):
        size = index.fandango_size()
        if size >= self.n:
            return ConstraintResult(1.0)
        return ConstraintResult(size / self.n, ((),))


@dataclass
class CountBound(Constraint):
    """The whole tree holds between ``min`` and ``max`` instances of ``selector``."""

    selector: str
    min: int = 0
    max: int | None = None
    name: str = field(default="count_bound", compare=False)

    def prepare(self, graph):
        _require(graph, self.selector)

    def evaluate(self, index):
        inst = index.instances(self.selector)
        c = len(inst)
        hi = c if self.max is None else self.max
        dist = max(0, self.min - c, c - hi)
        if dist == 0:
            return ConstraintResult(1.0)
        if c > hi:
            bad = tuple(index.path(i) for i in inst)
        else:
            bad = tuple(index.path(index.parent[i]) for i in inst if i > 0) or ((),)
        return ConstraintResult(1.0 / (1.0 + dist), bad)


class FunctionConstraint(Constraint):
    """Wraps ``fn(index) -> (score, violations)`` or ``fn(index) -> bool``."""

    def __init__(self, fn: Callable, name: str | None = None, rules: Sequence[str] = ()):
        self.fn = fn
        self.name = name or getattr(fn, "__name__", "constraint")
        self.rules = tuple(rules)

    def prepare(self, graph):
        _require(graph, *self.rules)

    def evaluate(self, index):
        r = self.fn(index)
        if isinstance(r, ConstraintResult):
            return r
        if isinstance(r, bool):
            return ConstraintResult(1.0 if r else 0.0, () if r else ((),))
        score, bad = r
        return ConstraintResult(float(score), tuple(bad))

    def __repr__(self):
        return f"FunctionConstraint({self.name!r})"


_REGISTRY: dict[str, Callable[..., Constraint]] = {
    "cardinality_equal": CardinalityEqual,
    "cardinality_eq_k": CardinalityEqK,
    "node_goal": NodeGoal,
    "count_bound": CountBound,
}
_PLUGINS = ("gramforge.corpus.rules",)
_plugins_loaded = False


def register_constraint(kind: str, rules: Sequence[str] = ()):
    """Decorator adding a constraint factory under ``kind``.

    A plain function ``fn(index)`` is wrapped in :class:`FunctionConstraint`;
    ``rules`` names the grammar rules it reads, checked when it is prepared.
    """

    def deco(obj):
        if isinstance(obj, type) and issubclass(obj, Constraint):
            _REGISTRY[kind] = obj
        else:
            _REGISTRY[kind] = lambda **kw: FunctionConstraint(obj, kind, **{"rules": rules, **kw})
        return obj

    return deco


def _load_plugins():
    global _plugins_loaded
    if not _plugins_loaded:
        _plugins_loaded = True
        for mod in _PLUGINS:
            importlib.import_module(mod)


def registered_constraints() -> list[str]:
    _load_plugins()
    return sorted(_REGISTRY)


def make_constraint(kind: str, **params) -> Constraint:
    """Instantiate a registered constraint, or ``module:attr`` for user code."""
    _load_plugins()
    if ":" in kind:
        mod, attr = kind.split(":", 1)
        obj = getattr(importlib.import_module(mod), attr)
        if isinstance(obj, type) and issubclass(obj, Constraint):
            return obj(**params)
        if isinstance(obj, Constraint):
            return obj
        return FunctionConstraint(obj, attr, **params)
    try:
        factory = _REGISTRY[kind]
    except KeyError:
        raise UnknownConstraint(f"unknown constraint kind {kind!r}") from None
    return factory(**params)


def check(tree, constraints: Sequence[Constraint], graph: GrammarGraph) -> list[ConstraintResult]:
    """Evaluate every constraint on ``tree`` against one shared index."""
    index = TreeIndex(tree, graph)
    out = []
    for i, c in enumerate(constraints):
        try:
            out.append(c.evaluate(index))
        except (UnknownSelector, ConstraintError):
            raise
        except Exception as exc:  # user constraints may raise anything
            raise ConstraintError(i, exc) from exc
    return out
