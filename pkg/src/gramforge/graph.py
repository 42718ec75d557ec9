"""The merged grammar graph and its indirection marking.

Every rule becomes a subgraph hanging off a nonterminal head node; references
become edges into the referenced head, which merges the subgraphs into one
graph.  Edges whose child must live in a separately allocated cell (repetition
bodies plus a feedback arc set of everything else) are flagged ``indirect``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import cached_property

from .grammar import (Alt, Concat, Expr, GrammarAst, Option, Plus, Range, Reference, Star,
                      Terminal, escape_bytes)

__all__ = [
    "Kind", "GraphNode", "Edge", "GrammarGraph",
    "build_graph", "mark_indirection", "compile_grammar", "enumerate_k_paths", "to_dot",
    "feedback_arc_set", "is_acyclic",
]


class Kind(str, enum.Enum):
    HEAD = "head"
    ALT = "alt"
    CONCAT = "concat"
    STAR = "star"
    PLUS = "plus"
    RANGE = "range"
    OPTION = "option"
    TERMINAL = "terminal"

    @property
    def is_repetition(self) -> bool:
        return self in _REPETITIONS


_REPETITIONS = frozenset({Kind.STAR, Kind.PLUS, Kind.RANGE, Kind.OPTION})


@dataclass(frozen=True)
class GraphNode:
    """Descriptor of one grammar position.

    ``lo``/``hi`` are the half-open repetition bounds (``hi`` is None when
    unbounded); ``literal`` is set for terminals and ``name`` for heads.
    """

    id: int
    kind: Kind
    rule: str
    arity: int = 0
    name: str | None = None
    literal: bytes | None = None
    lo: int = 0
    hi: int | None = None
    line: int = 0
    column: int = 0

    def describe(self) -> str:
        if self.kind is Kind.HEAD:
            return f"<{self.name}>"
        if self.kind is Kind.TERMINAL:
            return f'"{escape_bytes(self.literal)}"'
        if self.kind is Kind.ALT:
            return "|"
        if self.kind is Kind.CONCAT:
            return "~"
        return {Kind.STAR: "*", Kind.PLUS: "+", Kind.OPTION: "?"}.get(
            self.kind, f"{{{self.lo},{self.hi}}}")


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    index: int
    label: str
    indirect: bool = False


class GrammarGraph:
    """Immutable node/edge graph.  Node ids are dense indices into ``nodes``."""

    def __init__(self, nodes, edges, start_node: int, name: str = "grammar", ast: GrammarAst | None = None):
        self.nodes: tuple[GraphNode, ...] = tuple(nodes)
        self.edges: tuple[Edge, ...] = tuple(edges)
        self.start_node = start_node
        self.name = name
        self.ast = ast
        out: list[list[int]] = [[] for _ in self.nodes]
        for eid, e in enumerate(self.edges):
            out[e.src].append(eid)
        for lst in out:
            lst.sort(key=lambda eid: self.edges[eid].index)
        self.out_edges: tuple[tuple[int, ...], ...] = tuple(tuple(l) for l in out)

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other):
        if not isinstance(other, GrammarGraph):
            return NotImplemented
        return (self.nodes, self.edges, self.start_node) == (other.nodes, other.edges, other.start_node)

    def __hash__(self):
        return hash((self.nodes, self.edges, self.start_node))

    def __repr__(self):
        return f"GrammarGraph({self.name!r}, {len(self.nodes)} nodes, {len(self.edges)} edges)"

    def children(self, node_id: int) -> tuple[int, ...]:
        return tuple(self.edges[e].dst for e in self.out_edges[node_id])

    def child_edges(self, node_id: int) -> tuple[Edge, ...]:
        return tuple(self.edges[e] for e in self.out_edges[node_id])

    @cached_property
    def heads(self) -> dict[str, int]:
        return {n.name: n.id for n in self.nodes if n.kind is Kind.HEAD}

    def head(self, rule: str) -> int:
        try:
            return self.heads[rule]
        except KeyError:
            raise KeyError(f"grammar has no rule <{rule}>") from None

    @property
    def indirect_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.indirect]

    @cached_property
    def min_depths(self) -> tuple[float, ...]:
        """Height of the shallowest complete subtree rooted at each node.

        A lone leaf has height 1.  Nodes with no finite derivation get ``inf``.
        Computed as a least fixpoint over the node equations.
        """
        md = [math.inf] * len(self.nodes)
        changed = True
        while changed:
            changed = False
            for n in self.nodes:
                kids = self.children(n.id)
                k = n.kind
                if k is Kind.TERMINAL:
                    v = 1
                elif k in (Kind.HEAD, Kind.PLUS):
                    v = 1 + md[kids[0]]
                elif k is Kind.CONCAT:
                    v = 1 + max(md[c] for c in kids)
                elif k is Kind.ALT:
                    v = 1 + min(md[c] for c in kids)
                elif k is Kind.RANGE and n.lo > 0:
                    v = 1 + md[kids[0]]
                else:  # star, option, range starting at zero
                    v = 1
                if v < md[n.id]:
                    md[n.id] = v
                    changed = True
        return tuple(md)


def _bound_label(kind: Kind, lo: int, hi: int | None) -> str:
    return f"{lo}.." if hi is None else f"{lo}..{hi}"


def build_graph(ast: GrammarAst) -> GrammarGraph:
    """Expand each rule into a subgraph and merge them at the nonterminal heads.

    Node ids follow rule order, then pre-order within each rule body.
    """
    nodes: list[GraphNode] = []
    pending: list[tuple[int, int | str, int, str]] = []  # src, dst id or rule name, index, label
    heads: dict[str, int] = {}

    def add(kind: Kind, rule: str, pos, **kw) -> int:
        nid = len(nodes)
        nodes.append(GraphNode(nid, kind, rule, line=pos[0], column=pos[1], **kw))
        return nid

    def visit(e: Expr, rule: str, parent: int, index: int, label: str):
        if isinstance(e, Reference):
            pending.append((parent, e.name, index, label))
            return
        if isinstance(e, Terminal):
            nid = add(Kind.TERMINAL, rule, e.pos, literal=e.value)
        elif isinstance(e, (Concat, Alt)):
            kind = Kind.CONCAT if isinstance(e, Concat) else Kind.ALT
            nid = add(kind, rule, e.pos, arity=len(e.children))
        elif isinstance(e, Star):
            nid = add(Kind.STAR, rule, e.pos, lo=0, hi=None)
        elif isinstance(e, Plus):
            nid = add(Kind.PLUS, rule, e.pos, lo=1, hi=None)
        elif isinstance(e, Range):
            nid = add(Kind.RANGE, rule, e.pos, lo=e.lo, hi=e.hi)
        elif isinstance(e, Option):
            nid = add(Kind.OPTION, rule, e.pos, lo=0, hi=2)
        else:
            raise TypeError(f"unexpected expression {e!r}")
        pending.append((parent, nid, index, label))
        if isinstance(e, (Concat, Alt)):
            for i, child in enumerate(e.children):
                visit(child, rule, nid, i, str(i))
        elif not isinstance(e, Terminal):
            n = nodes[nid]
            visit(e.inner, rule, nid, 0, _bound_label(n.kind, n.lo, n.hi))

    for rule, body in ast.rules.items():
        src = ast.sources.get(rule)
        hid = add(Kind.HEAD, rule, (src.line, src.column) if src else (0, 0), arity=1, name=rule)
        heads[rule] = hid
        visit(body, rule, hid, 0, "0")

    edges = [Edge(src, heads[dst] if isinstance(dst, str) else dst, index, label)
             for src, dst, index, label in pending]
    return GrammarGraph(nodes, edges, heads[ast.start], ast.name, ast)


def is_acyclic(n_nodes: int, edges) -> bool:
    """Kahn's algorithm over ``(src, dst)`` pairs."""
    indeg = [0] * n_nodes
    out: list[list[int]] = [[] for _ in range(n_nodes)]
    for s, d in edges:
        out[s].append(d)
        indeg[d] += 1
    ready = [v for v in range(n_nodes) if indeg[v] == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for w in out[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    return seen == n_nodes


def feedback_arc_set(n_nodes: int, edges: list[tuple[int, int]]) -> set[int]:
    """Eades-Lin-Smyth greedy feedback arc set.

    Returns indices into ``edges``.  Ties are broken by the lowest node id so
    the result is reproducible; self-loops are always included.
    """
    out: list[list[int]] = [[] for _ in range(n_nodes)]
    inc: list[list[int]] = [[] for _ in range(n_nodes)]
    fas = set()
    for i, (s, d) in enumerate(edges):
        if s == d:
            fas.add(i)
            continue
        out[s].append(i)
        inc[d].append(i)
    outdeg = [len(o) for o in out]
    indeg = [len(o) for o in inc]
    alive = [True] * n_nodes
    left, right = [], []
    remaining = n_nodes

    def remove(v):
        nonlocal remaining
        alive[v] = False
        remaining -= 1
        for e in out[v]:
            w = edges[e][1]
            if alive[w]:
                indeg[w] -= 1
        for e in inc[v]:
            u = edges[e][0]
            if alive[u]:
                outdeg[u] -= 1

    while remaining:
        progress = True
        while progress:
            progress = False
            for v in range(n_nodes):
                if alive[v] and outdeg[v] == 0:
                    right.append(v)
                    remove(v)
                    progress = True
                    break
            else:
                for v in range(n_nodes):
                    if alive[v] and indeg[v] == 0:
                        left.append(v)
                        remove(v)
                        progress = True
                        break
        if not remaining:
            break
        best = max((v for v in range(n_nodes) if alive[v]), key=lambda v: (outdeg[v] - indeg[v], -v))
        left.append(best)
        remove(best)

    order = left + right[::-1]
    rank = {v: i for i, v in enumerate(order)}
    for i, (s, d) in enumerate(edges):
        if s != d and rank[s] > rank[d]:
            fas.add(i)
    return fas


def mark_indirection(graph: GrammarGraph) -> GrammarGraph:
    """Flag repetition edges and a feedback arc set of the rest as indirect."""
    edges = list(graph.edges)
    candidates = []
    for eid, e in enumerate(edges):
        if graph.nodes[e.src].kind.is_repetition:
            edges[eid] = replace(e, indirect=True)
        else:
            candidates.append(eid)
    fas = feedback_arc_set(len(graph.nodes), [(edges[i].src, edges[i].dst) for i in candidates])
    for j in fas:
        eid = candidates[j]
        edges[eid] = replace(edges[eid], indirect=True)
    marked = GrammarGraph(graph.nodes, edges, graph.start_node, graph.name, graph.ast)
    assert is_acyclic(len(marked.nodes), [(e.src, e.dst) for e in marked.edges if not e.indirect])
    return marked


def compile_grammar(ast: GrammarAst) -> GrammarGraph:
    """Shorthand for ``mark_indirection(build_graph(ast))``."""
    return mark_indirection(build_graph(ast))


def enumerate_k_paths(graph: GrammarGraph, k: int) -> set[tuple[int, ...]]:
    """All directed walks of at most ``k`` nodes that never revisit a node."""
    if k < 1:
        raise ValueError("k must be at least 1")
    succ = [sorted(set(graph.children(v))) for v in range(len(graph.nodes))]
    paths: set[tuple[int, ...]] = set()

    def extend(path: tuple[int, ...]):
        paths.add(path)
        if len(path) == k:
            return
        for w in succ[path[-1]]:
            if w not in path:
                extend(path + (w,))

    for v in range(len(graph.nodes)):
        extend((v,))
    return paths


def to_dot(graph: GrammarGraph) -> str:
    def q(s: str) -> str:
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

    lines = [f"digraph {q(graph.name)} {{", "  node [shape=circle];"]
    for n in graph.nodes:
        shape = ', shape=box' if n.kind is Kind.HEAD else ''
        lines.append(f"  n{n.id} [label={q(n.describe())}{shape}];")
    for e in graph.edges:
        style = ", style=dashed" if e.indirect else ""
        lines.append(f"  n{e.src} -> n{e.dst} [label={q(e.label)}{style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
