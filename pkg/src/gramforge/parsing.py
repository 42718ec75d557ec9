"""Reference parser: recognizes inputs and rebuilds derivation trees.

A memoized recursive descent over the grammar graph that computes, for each
``(node, position)``, the full set of positions where a match can end.
Ambiguous inputs yield the first derivation in variant order.  Left-recursive
grammars are rejected with :class:`LeftRecursion`.
"""

from __future__ import annotations

import sys

from .dynamic import (ConcatChildren, DynNode, OptionalChild, RefChild, RepChildren, TerminalLeaf,
                      VariantChoice)
from .graph import GrammarGraph, Kind

__all__ = ["Parser", "ParseError", "LeftRecursion", "accepts", "parse"]


class ParseError(ValueError):
    pass


class LeftRecursion(ParseError):
    pass


_BUSY = object()


class Parser:
    def __init__(self, graph: GrammarGraph):
        self.graph = graph
        self._kids = tuple(graph.children(n.id) for n in graph.nodes)

    def _ends(self, data: bytes, memo: dict, nid: int, pos: int) -> frozenset:
        key = (nid, pos)
        got = memo.get(key)
        if got is not None:
            if got is _BUSY:
                raise LeftRecursion(f"left recursion through node {nid} ({self.graph.nodes[nid].rule})")
            return got
        memo[key] = _BUSY
        n = self.graph.nodes[nid]
        k = n.kind
        kids = self._kids[nid]
        ends = self._ends
        if k is Kind.TERMINAL:
            lit = n.literal
            res = frozenset((pos + len(lit),)) if data.startswith(lit, pos) else frozenset()
        elif k is Kind.HEAD:
            res = ends(data, memo, kids[0], pos)
        elif k is Kind.ALT:
            res = frozenset().union(*(ends(data, memo, c, pos) for c in kids))
        elif k is Kind.CONCAT:
            cur = {pos}
            for c in kids:
                nxt = set()
                for p in cur:
                    nxt |= ends(data, memo, c, p)
                cur = nxt
                if not cur:
                    break
            res = frozenset(cur)
        else:
            res = frozenset(self._rep_ends(data, memo, n, kids[0], pos))
        memo[key] = res
        return res

    def _rep_ends(self, data, memo, n, c, pos) -> set:
        lo, hi = n.lo, n.hi
        level = {pos}
        count = 0
        while count < lo:
            nxt = set()
            for p in level:
                nxt |= self._ends(data, memo, c, p)
            level = nxt
            count += 1
            if not level:
                return set()
        if hi is None:
            seen = set(level)
            frontier = list(level)
            while frontier:
                p = frontier.pop()
                for q in self._ends(data, memo, c, p):
                    if q not in seen:
                        seen.add(q)
                        frontier.append(q)
            return seen
        result = set(level)
        while count < hi - 1 and level:
            nxt = set()
            for p in level:
                nxt |= self._ends(data, memo, c, p)
            level = nxt
            result |= nxt
            count += 1
        return result

    def recognize(self, data: bytes, node: int | None = None) -> bool:
        nid = self.graph.start_node if node is None else node
        memo: dict = {}
        with _deep_recursion():
            return len(data) in self._ends(data, memo, nid, 0)

    def parse(self, data: bytes, node: int | None = None) -> DynNode:
        nid = self.graph.start_node if node is None else node
        memo: dict = {}
        with _deep_recursion():
            if len(data) not in self._ends(data, memo, nid, 0):
                raise ParseError(f"input is not in the language of <{self.graph.nodes[nid].rule}>")
            return self._build(data, memo, nid, 0, len(data))

    # tree reconstruction; only called on spans known to match
    def _build(self, data, memo, nid, pos, end) -> DynNode:
        n = self.graph.nodes[nid]
        k = n.kind
        kids = self._kids[nid]
        if k is Kind.TERMINAL:
            return DynNode(n, TerminalLeaf(n.literal))
        if k is Kind.HEAD:
            return DynNode(n, RefChild(self._build(data, memo, kids[0], pos, end)))
        if k is Kind.ALT:
            for i, c in enumerate(kids):
                if end in self._ends(data, memo, c, pos):
                    return DynNode(n, VariantChoice(i, self._build(data, memo, c, pos, end)))
            raise AssertionError("no variant spans the match")
        if k is Kind.CONCAT:
            spans = self._split(data, memo, list(kids), pos, end)
            return DynNode(n, ConcatChildren([self._build(data, memo, c, a, b)
                                              for c, (a, b) in zip(kids, spans)]))
        c = kids[0]
        spans = self._split_rep(data, memo, n, c, pos, end)
        items = [self._build(data, memo, c, a, b) for a, b in spans]
        if k is Kind.OPTION:
            return DynNode(n, OptionalChild(items[0] if items else None))
        return DynNode(n, RepChildren(items))

    def _split(self, data, memo, seq, pos, end):
        failed = set()

        def go(i, p):
            if i == len(seq):
                return [] if p == end else None
            if (i, p) in failed:
                return None
            for q in sorted(self._ends(data, memo, seq[i], p)):
                if q > end:
                    continue
                rest = go(i + 1, q)
                if rest is not None:
                    return [(p, q)] + rest
            failed.add((i, p))
            return None

        return go(0, pos)

    def _split_rep(self, data, memo, n, c, pos, end):
        lo, hi = n.lo, n.hi
        failed = set()

        def key(count, p):
            return (count if hi is not None else min(count, lo), p)

        def go(count, p):
            if p == end and count >= lo:
                return []
            if hi is not None and count >= hi - 1:
                return None
            if key(count, p) in failed:
                return None
            for q in sorted(self._ends(data, memo, c, p), reverse=True):
                if q > end or (q == p and count >= lo):
                    continue
                rest = go(count + 1, q)
                if rest is not None:
                    return [(p, q)] + rest
            failed.add(key(count, p))
            return None

        spans = go(0, pos)
        if spans is None:
            raise AssertionError("repetition does not span the match")
        return spans


class _deep_recursion:
    def __enter__(self):
        self.old = sys.getrecursionlimit()
        if self.old < 8000:
            sys.setrecursionlimit(8000)

    def __exit__(self, *exc):
        return False


def accepts(graph: GrammarGraph, data: bytes) -> bool:
    return Parser(graph).recognize(data)


def parse(graph: GrammarGraph, data: bytes) -> DynNode:
    return Parser(graph).parse(data)
