"""k-path coverage of the grammar graph by a set of derivation trees.

The denominator is every simple walk of at most ``k`` graph nodes.  A tree
covers a walk when some downward chain of tree nodes visits exactly those
graph nodes in order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .graph import GrammarGraph, enumerate_k_paths

__all__ = ["KPathReport", "GrammarMismatch", "observed_chains", "kpath_cover", "KPathTracker"]


class GrammarMismatch(ValueError):
    """A tree contains nodes that do not belong to the graph being measured."""


def observed_chains(tree, k: int, graph: GrammarGraph | None = None) -> set[tuple[int, ...]]:
    """All downward chains of at most ``k`` tree nodes, as graph-node id tuples.

    With ``graph`` given, every node is checked to belong to it.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    out: set[tuple[int, ...]] = set()
    memo: dict[int, set[tuple[int, ...]]] = {}
    nodes = graph.nodes if graph is not None else None

    # chains starting at a node, limited to k nodes; built bottom-up per subtree
    def below(node) -> set[tuple[int, ...]]:
        key = id(node)
        got = memo.get(key)
        if got is not None:
            return got
        d = node.definition()
        nid = d.id
        if nodes is not None and (nid >= len(nodes) or nodes[nid] != d):
            raise GrammarMismatch(f"tree node {d.describe()} (id {nid}) is not in grammar {graph.name!r}")
        res = {(nid,)}
        for c in node.children():
            for chain in below(c):
                if len(chain) < k:
                    res.add((nid,) + chain)
        memo[key] = res
        out.update(res)
        return res

    keep = []  # keep nodes alive so ids stay unique while memoized
    stack = [tree]
    while stack:
        n = stack.pop()
        keep.append(n)
        stack.extend(n.children())
    for n in reversed(keep):
        below(n)
    return out


@dataclass(frozen=True)
class KPathReport:
    k: int
    covered: frozenset
    total: frozenset

    @property
    def coverage(self) -> float:
        """Covered fraction in [0, 1]."""
        return len(self.covered) / len(self.total) if self.total else 1.0

    @property
    def percent(self) -> float:
        return 100.0 * self.coverage

    def missing(self) -> list[tuple[int, ...]]:
        return sorted(self.total - self.covered)

    def by_length(self) -> dict[int, tuple[int, int]]:
        """``length -> (covered, total)`` per walk length."""
        out: dict[int, tuple[int, int]] = {}
        for n in range(1, self.k + 1):
            t = sum(1 for p in self.total if len(p) == n)
            c = sum(1 for p in self.covered if len(p) == n)
            out[n] = (c, t)
        return out


class KPathTracker:
    """Accumulates coverage tree by tree."""

    def __init__(self, graph: GrammarGraph, k: int):
        self.graph = graph
        self.k = k
        self.total = frozenset(enumerate_k_paths(graph, k))
        self.covered: set[tuple[int, ...]] = set()

    def add(self, tree) -> int:
        """Record ``tree``; returns how many new walks it covered."""
        new = (observed_chains(tree, self.k, self.graph) & self.total) - self.covered
        self.covered |= new
        return len(new)

    def report(self) -> KPathReport:
        return KPathReport(self.k, frozenset(self.covered), self.total)


def kpath_cover(forest: Iterable, graph: GrammarGraph, k: int) -> KPathReport:
    """Coverage of the length-``k`` simple walks of ``graph`` by ``forest``."""
    t = KPathTracker(graph, k)
    for tree in forest:
        t.add(tree)
    return t.report()
