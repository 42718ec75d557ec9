"""Runtime interpretation of a grammar graph.

Every tree node is a :class:`DynNode` pointing at its graph node plus a
payload whose shape depends on the node kind.  The interpreter asks the
sampler exactly the same questions in the same order as the generated
classes, so both backends build identical trees from identical seeds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .generation import Generator, GenContext
from .graph import GrammarGraph, GraphNode, Kind
from .runtime import Break
from .sampling import Sampler

__all__ = ["DynNode", "DynamicBackend", "VariantChoice", "ConcatChildren", "RepChildren",
           "OptionalChild", "TerminalLeaf", "RefChild", "load_dynamic"]


@dataclass(slots=True)
class TerminalLeaf:
    literal: bytes


@dataclass(slots=True)
class RefChild:
    child: "DynNode"


@dataclass(slots=True)
class VariantChoice:
    index: int
    child: "DynNode"


@dataclass(slots=True)
class ConcatChildren:
    children: list


@dataclass(slots=True)
class RepChildren:
    children: list


@dataclass(slots=True)
class OptionalChild:
    child: "DynNode | None"


class DynNode:
    """A derivation-tree node of any grammar, described at runtime."""

    __slots__ = ("node", "payload")

    def __init__(self, node: GraphNode, payload):
        self.node = node
        self.payload = payload

    @property
    def ID(self) -> int:
        return self.node.id

    def definition(self) -> GraphNode:
        return self.node

    def children(self):
        p = self.payload
        k = self.node.kind
        if k is Kind.TERMINAL:
            return ()
        if k is Kind.HEAD or k is Kind.ALT:
            return (p.child,)
        if k is Kind.OPTION:
            return () if p.child is None else (p.child,)
        return p.children

    def set_child(self, index: int, value: "DynNode") -> None:
        p = self.payload
        k = self.node.kind
        if k is Kind.HEAD or k is Kind.ALT or (k is Kind.OPTION and p.child is not None):
            if index != 0:
                raise IndexError(index)
            p.child = value
        elif k in (Kind.CONCAT, Kind.STAR, Kind.PLUS, Kind.RANGE):
            if index < 0:
                raise IndexError(index)
            p.children[index] = value
        else:
            raise IndexError(index)

    def visit_each(self, visitor):
        for i, c in enumerate(self.children()):
            visitor = visitor.visit(c, i)
            if isinstance(visitor, Break):
                break
        return visitor

    def clone(self) -> "DynNode":
        p = self.payload
        k = self.node.kind
        if k is Kind.TERMINAL:
            q = TerminalLeaf(p.literal)
        elif k is Kind.HEAD:
            q = RefChild(p.child.clone())
        elif k is Kind.ALT:
            q = VariantChoice(p.index, p.child.clone())
        elif k is Kind.CONCAT:
            q = ConcatChildren([c.clone() for c in p.children])
        elif k is Kind.OPTION:
            q = OptionalChild(None if p.child is None else p.child.clone())
        else:
            q = RepChildren([c.clone() for c in p.children])
        return DynNode(self.node, q)

    def _w(self, out: list) -> None:
        p = self.payload
        k = self.node.kind
        if k is Kind.TERMINAL:
            out.append(p.literal)
        elif k is Kind.HEAD or k is Kind.ALT:
            p.child._w(out)
        elif k is Kind.OPTION:
            if p.child is not None:
                p.child._w(out)
        else:
            for c in p.children:
                c._w(out)

    def to_bytes(self) -> bytes:
        out: list[bytes] = []
        self._w(out)
        return b"".join(out)

    def __repr__(self):
        return f"DynNode({self.node.id}, {self.to_bytes()!r})"


class DynamicBackend:
    """Generation by walking the graph at runtime."""

    kind = "dynamic"

    def __init__(self, graph: GrammarGraph):
        self.graph = graph
        md = graph.min_depths
        self._nodes = graph.nodes
        self._kids = tuple(graph.children(n.id) for n in graph.nodes)
        # alternations: deepest shallowest-variant; repetitions: element min depth
        self._steer = tuple(
            (max(md[c] for c in self._kids[n.id]) if n.kind is Kind.ALT
             else md[self._kids[n.id][0]] if n.kind.is_repetition else 0)
            for n in graph.nodes)

    def expand(self, nid: int, ctx: GenContext, d: int) -> DynNode:
        h = ctx.hooks
        if h and nid in h:
            return ctx.hook(nid, d)
        return self.expand_default(nid, ctx, d)

    def expand_default(self, nid: int, ctx: GenContext, d: int) -> DynNode:
        n = self._nodes[nid]
        k = n.kind
        kids = self._kids[nid]
        expand = self.expand
        if k is Kind.TERMINAL:
            return DynNode(n, TerminalLeaf(n.literal))
        if k is Kind.HEAD:
            return DynNode(n, RefChild(expand(kids[0], ctx, d + 1)))
        if k is Kind.CONCAT:
            d1 = d + 1
            return DynNode(n, ConcatChildren([expand(c, ctx, d1) for c in kids]))
        if k is Kind.ALT:
            if d + self._steer[nid] <= ctx.limit:
                i = ctx.sampler.sample_alt(n.arity, nid)
            else:
                i = ctx.steer_alt(nid, d)
            return DynNode(n, VariantChoice(i, expand(kids[i], ctx, d + 1)))
        if d + self._steer[nid] <= ctx.limit:
            count = ctx.sampler.sample_rep(n.lo, n.hi, nid)
        else:
            count = ctx.forced_rep(nid, n.lo)
        c = kids[0]
        if k is Kind.OPTION:
            return DynNode(n, OptionalChild(expand(c, ctx, d + 1) if count else None))
        d1 = d + 1
        return DynNode(n, RepChildren([expand(c, ctx, d1) for _ in range(count)]))

    def engine(self, sampler: Sampler, generators: Sequence[Generator] = ()) -> GenContext:
        return GenContext(self, sampler, generators)

    def generate(self, sampler: Sampler, generators: Sequence[Generator] = (), node_id: int | None = None):
        return GenContext(self, sampler, generators).generate(node_id)

    def serialize(self, tree: DynNode) -> bytes:
        out: list[bytes] = []
        tree._w(out)
        return b"".join(out)

    def __repr__(self):
        return f"DynamicBackend({self.graph.name!r})"


def load_dynamic(graph: GrammarGraph) -> DynamicBackend:
    return DynamicBackend(graph)
