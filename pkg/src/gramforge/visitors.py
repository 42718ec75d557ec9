"""Tree traversal through the visitor protocol, plus the stock visitors.

A visitor is any object with ``visit(node, index)``.  It returns the visitor
to continue with (often itself) or a :class:`~gramforge.runtime.Break` to
stop the traversal.  ``node.visit_each(v)`` threads ``v`` through the
children in order; visitors recurse by calling it themselves.
"""

from __future__ import annotations

from typing import Iterator

from .graph import Kind
from .runtime import Break, InvalidPath

__all__ = ["Visitor", "traverse", "WriteVisitor", "write_tree", "serialize", "CountVisitor",
           "count_fandango_nodes", "count_nodes", "collect_paths", "iter_nodes", "resolve_path",
           "find_same_type_subtrees", "validate_tree", "Break", "InvalidPath", "tree_height"]


class Visitor:
    def visit(self, node, index: int):
        raise NotImplementedError


def traverse(root, visitor):
    """Visit ``root`` itself and return what the traversal ended with."""
    return visitor.visit(root, 0)


class WriteVisitor(Visitor):
    """Writes the terminal bytes of the visited tree to ``sink``.

    ``sink`` is anything with a ``write(bytes)`` method; errors it raises
    propagate out of the traversal.  Without a sink the chunks collect in
    ``out``.
    """

    def __init__(self, sink=None):
        self.out: list[bytes] = []
        self._write = self.out.append if sink is None else sink.write
        self.written = 0

    def visit(self, node, index):
        d = node.definition()
        if d.kind is Kind.TERMINAL:
            if d.literal:
                self._write(d.literal)
                self.written += len(d.literal)
            return self
        return node.visit_each(self)


def write_tree(tree, sink=None):
    """Serialize through the visitor interface.

    With a ``sink`` the bytes are written to it and the byte count returned;
    without one the serialization itself is returned.
    """
    v = WriteVisitor(sink)
    traverse(tree, v)
    return b"".join(v.out) if sink is None else v.written


def serialize(tree) -> bytes:
    """Serialization through the per-type writers (faster, same output)."""
    out: list[bytes] = []
    tree._w(out)
    return b"".join(out)


class CountVisitor(Visitor):
    """Counts visited nodes whose kind is in ``kinds`` (all kinds when None)."""

    def __init__(self, kinds=None):
        self.kinds = kinds
        self.count = 0

    def visit(self, node, index):
        if self.kinds is None or node.definition().kind in self.kinds:
            self.count += 1
        return node.visit_each(self)


def count_fandango_nodes(tree) -> int:
    """Size measured as nonterminal plus terminal nodes.

    This is the size other grammar fuzzers report: alternation, sequence and
    repetition nodes do not exist in their trees.
    """
    v = CountVisitor(frozenset({Kind.HEAD, Kind.TERMINAL}))
    traverse(tree, v)
    return v.count


def count_nodes(tree) -> int:
    v = CountVisitor()
    traverse(tree, v)
    return v.count


def iter_nodes(tree) -> Iterator[tuple[tuple[int, ...], object]]:
    """``(path, node)`` pairs in pre-order, without recursion."""
    stack = [((), tree)]
    pop, push = stack.pop, stack.append
    while stack:
        path, node = pop()
        yield path, node
        kids = node.children()
        for i in range(len(kids) - 1, -1, -1):
            push((path + (i,), kids[i]))


def collect_paths(tree, predicate=None) -> list[tuple[int, ...]]:
    """Pre-order paths of the nodes whose grammar node satisfies ``predicate``.

    ``predicate`` receives the node's :class:`~gramforge.graph.GraphNode`;
    None selects every node.
    """
    if predicate is None:
        return [p for p, _ in iter_nodes(tree)]
    return [p for p, n in iter_nodes(tree) if predicate(n.definition())]


def resolve_path(tree, path):
    """The node reached from ``tree`` by taking child ``path[i]`` at depth ``i``."""
    walk = getattr(tree, "_walk", None)  # generated classes walk two levels per call
    node = tree
    try:
        if walk is not None:
            try:
                return walk(path, 0, len(path))
            except RecursionError:
                pass
        for i in path:
            if i < 0:
                raise IndexError(i)
            node = node.children()[i]
    except IndexError:
        _raise_invalid(tree, path)
    return node


def _raise_invalid(tree, path):
    node = tree
    for depth, i in enumerate(path):
        kids = node.children()
        if not 0 <= i < len(kids):
            raise InvalidPath(i, depth)
        node = kids[i]


def find_same_type_subtrees(tree, node_type) -> list[tuple[int, ...]]:
    """Paths of every subtree whose grammar node is ``node_type``, in pre-order.

    ``node_type`` is a graph node id or a :class:`~gramforge.graph.GraphNode`.
    """
    node_id = getattr(node_type, "id", node_type)
    return [p for p, n in iter_nodes(tree) if n.definition().id == node_id]


def tree_height(tree) -> int:
    best = 0
    stack = [(1, tree)]
    while stack:
        h, n = stack.pop()
        best = max(best, h)
        stack.extend((h + 1, c) for c in n.children())
    return best


def validate_tree(tree, graph) -> None:
    """Check that every child sits at a grammar-consistent position.

    Raises ``TypeError`` naming the first offending path.
    """
    for path, node in iter_nodes(tree):
        d = node.definition()
        kids = graph.children(d.id)
        cs = node.children()
        k = d.kind
        if k is Kind.ALT:
            expected = [kids[node.index if hasattr(node, "index") else node.payload.index]]
        elif k in (Kind.HEAD, Kind.CONCAT):
            expected = list(kids)
        elif k is Kind.TERMINAL:
            expected = []
        else:
            expected = [kids[0]] * len(cs)
            if (len(cs) < d.lo) or (d.hi is not None and len(cs) >= d.hi):
                raise TypeError(f"repetition count {len(cs)} out of bounds at {path}")
        if len(cs) != len(expected):
            raise TypeError(f"wrong number of children at {path}")
        for i, (c, e) in enumerate(zip(cs, expected)):
            if c.definition().id != e:
                raise TypeError(f"child {i} at {path} is node {c.definition().id}, expected {e}")
