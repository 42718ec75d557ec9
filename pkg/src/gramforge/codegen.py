"""Emit Python source with one concrete class per grammar-graph node.

The mapping from node kind to class shape:

========== =====================================================
head       record with a single ``child_0`` field
terminal   unit type with a ``LITERAL`` constant and one instance
concat     record with one ``child_i`` field per element
alt        tagged union: ``index`` plus ``value`` of that variant's type
star/plus  list ``items`` of the element type
range      list ``items`` (bounds live in generation, not the type)
option     ``value`` holding the element or None
========== =====================================================

Indirect edges store their child in a :class:`~gramforge.runtime.Cell`
behind a property of the public field name, so user code never sees the
cell.  Per node, the generated node contract (``definition``, ``children``,
``set_child``, ``visit_each``, ``clone``, generation) lives in a mixin that
the concrete class inherits.
"""

from __future__ import annotations

import hashlib
import json
import re
import types
from dataclasses import dataclass

from .graph import GrammarGraph, GraphNode, Kind

__all__ = ["EmitPlan", "TypePlan", "NameCollision", "type_name", "plan_emit",
           "emit_types", "emit_opaque", "emit_node_contract", "emit_module",
           "manifest", "load_module"]

_KIND_NAMES = {
    Kind.HEAD: "Head", Kind.ALT: "Alt", Kind.CONCAT: "Concat", Kind.STAR: "Star",
    Kind.PLUS: "Plus", Kind.RANGE: "Range", Kind.OPTION: "Option", Kind.TERMINAL: "Terminal",
}
_SHAPES = {
    Kind.HEAD: "record", Kind.CONCAT: "record", Kind.ALT: "union", Kind.STAR: "sequence",
    Kind.PLUS: "sequence", Kind.RANGE: "sequence", Kind.OPTION: "optional", Kind.TERMINAL: "unit",
}
_ALT_INLINE_MAX = 4


class NameCollision(AssertionError):
    pass


def _camel(rule: str) -> str:
    parts = [p for p in rule.split("_") if p]
    name = "".join(p[:1].upper() + p[1:] for p in parts) or "Rule"
    return name if not name[0].isdigit() else "R" + name


def type_name(node: GraphNode) -> str:
    return f"{_camel(node.rule)}_{_KIND_NAMES[node.kind]}_{node.id}"


@dataclass(frozen=True)
class TypePlan:
    node_id: int
    name: str
    kind: Kind
    shape: str
    children: tuple[int, ...]
    indirect: tuple[bool, ...]
    doc: str


@dataclass(frozen=True)
class EmitPlan:
    grammar: str
    start: int
    types: tuple[TypePlan, ...]

    def __getitem__(self, node_id: int) -> TypePlan:
        return self.types[node_id]


def _doc(graph: GrammarGraph, n: GraphNode) -> str:
    what = {
        Kind.HEAD: f"Nonterminal <{n.rule}>.",
        Kind.TERMINAL: f"Terminal {n.describe()} in <{n.rule}>.",
        Kind.CONCAT: f"Sequence of {n.arity} elements in <{n.rule}>.",
        Kind.ALT: f"Choice between {n.arity} variants in <{n.rule}>.",
        Kind.STAR: f"Zero or more repetitions in <{n.rule}>.",
        Kind.PLUS: f"One or more repetitions in <{n.rule}>.",
        Kind.OPTION: f"Optional element in <{n.rule}>.",
        Kind.RANGE: f"Between {n.lo} and {(n.hi or 0) - 1} repetitions in <{n.rule}>.",
    }[n.kind]
    lines = [what]
    src = graph.ast.sources.get(n.rule) if graph.ast is not None else None
    if n.line:
        lines += ["", f"Grammar line {n.line}, column {n.column}:"]
    if src is not None:
        lines += [""] + ["    " + l for l in src.text.split("\n")]
    return "\n".join(lines)


def plan_emit(graph: GrammarGraph) -> EmitPlan:
    plans = []
    seen: set[str] = set()
    for n in graph.nodes:
        name = type_name(n)
        if name in seen:
            raise NameCollision(name)
        seen.add(name)
        edges = graph.child_edges(n.id)
        plans.append(TypePlan(n.id, name, n.kind, _SHAPES[n.kind], tuple(e.dst for e in edges),
                              tuple(e.indirect for e in edges), _doc(graph, n)))
    return EmitPlan(graph.name, graph.start_node, tuple(plans))


# --- source emission ---------------------------------------------------------

def _docstring(text: str, indent: str) -> list[str]:
    body = text.replace("\\", "\\\\").replace('"""', '\\"\\"\\"')
    lines = body.split("\n")
    if len(lines) == 1:
        return [f'{indent}"""{lines[0]}"""']
    out = [f'{indent}"""{lines[0]}']
    out += [(indent + l) if l else "" for l in lines[1:]]
    out.append(f'{indent}"""')
    return out


def _num(x) -> str:
    return "inf" if x == float("inf") else str(int(x))


class _Emitter:
    def __init__(self, graph: GrammarGraph):
        self.graph = graph
        self.plan = plan_emit(graph)
        self.md = graph.min_depths

    def cls(self, nid: int) -> str:
        return self.plan[nid].name

    def is_term(self, nid: int) -> bool:
        return self.graph.nodes[nid].kind is Kind.TERMINAL

    def lit(self, nid: int) -> str:
        return repr(self.graph.nodes[nid].literal)

    # field read expression for child slot i of a head/concat node
    def read(self, p: TypePlan, i: int) -> str:
        return f"self._child_{i}.value" if p.indirect[i] else f"self.child_{i}"

    # Path walks resolve two levels per call: the child's class is known here,
    # so the next level is inlined and deeper ones go through the _W/_M
    # aliases.  In "mut" mode the walk stops at the parent of the last step
    # and regenerates that child in place, as mutate() would.
    def walk(self, nid: int, var: str, ind: str, budget: int, mut: bool = False) -> list[str]:
        p = self.plan[nid]
        k = p.kind
        bad = f"{ind}    raise IndexError(i)"
        if mut:
            out = [f"{ind}i = p[k]", f"{ind}if k == last:"] + self.regen(p, var, ind + "    ")
        else:
            out = [f"{ind}if k == end:", f"{ind}    return {var}", f"{ind}i = p[k]"]
        if k is Kind.TERMINAL:
            return out + [f"{ind}raise IndexError(i)"]
        if k is Kind.ALT:
            out += [f"{ind}if i != 0:", bad]
            if budget > 1 and len(p.children) <= _ALT_INLINE_MAX:
                # the variant's class follows from the stored index
                for j, c in enumerate(p.children):
                    out += [f"{ind}if {var}.index == {j}:"] + \
                        self.descend(f"{var}.value", c, ind + "    ", budget, mut)
            call = "_mutate(p, k + 1, last, e)" if mut else "_walk(p, k + 1, end)"
            return out + [f"{ind}return {var}.value.{call}"]
        if k in (Kind.HEAD, Kind.CONCAT):
            for i, c in enumerate(p.children):
                expr = f"{var}._child_{i}.value" if p.indirect[i] else f"{var}.child_{i}"
                out += [f"{ind}if i == {i}:"] + self.descend(expr, c, ind + "    ", budget, mut)
            return out + [f"{ind}raise IndexError(i)"]
        c = p.children[0]
        if k is Kind.OPTION:
            v = f"v{budget}"
            return out + [f"{ind}{v} = {var}._value", f"{ind}if i != 0 or {v} is None:", bad] + \
                self.descend(f"{v}.value", c, ind, budget, mut)
        return out + [f"{ind}if i < 0:", bad] + self.descend(f"{var}.items[i]", c, ind, budget, mut)

    def descend(self, expr: str, c: int, ind: str, budget: int, mut: bool) -> list[str]:
        if budget > 1:
            var = f"n{budget}"
            return [f"{ind}{var} = {expr}", f"{ind}k += 1"] + self.walk(c, var, ind, budget - 1, mut)
        if mut:
            return [f"{ind}return _M{c}({expr}, p, k + 1, last, e)"]
        return [f"{ind}return _W{c}({expr}, p, k + 1, end)"]

    def fresh(self, c: int, ind: str) -> list[str]:
        """``new``: a regenerated node ``c`` at depth ``d``, under the depth limit."""
        md = self.md[c]
        if md == float("inf"):
            return [f"{ind}raise DepthExceeded({c})"]
        return [f"{ind}if d + {int(md) - 1} > e.limit:", f"{ind}    raise DepthExceeded({c}, d, e.limit)",
                f"{ind}new = _G{c}(e, d)"]

    def regen(self, p: TypePlan, var: str, ind: str) -> list[str]:
        k = p.kind
        head = [f"{ind}d = k + 2"]
        if k is Kind.TERMINAL:
            return [f"{ind}raise IndexError(i)"]
        if k is Kind.ALT:
            return [f"{ind}if i != 0:", f"{ind}    raise IndexError(i)",
                    f"{ind}{var}.value = _regen(e, {var}.value.ID, k + 2)", f"{ind}return"]
        if k in (Kind.HEAD, Kind.CONCAT):
            out = head
            for i, c in enumerate(p.children):
                dst = f"{var}._child_{i}.value" if p.indirect[i] else f"{var}.child_{i}"
                out += [f"{ind}if i == {i}:"] + self.fresh(c, ind + "    ")
                if self.md[c] != float("inf"):
                    out += [f"{ind}    {dst} = new", f"{ind}    return"]
            return out + [f"{ind}raise IndexError(i)"]
        c = p.children[0]
        if k is Kind.OPTION:
            return head + [f"{ind}v = {var}._value", f"{ind}if i != 0 or v is None:", f"{ind}    raise IndexError(i)"] + \
                self.fresh(c, ind) + [f"{ind}v.value = new", f"{ind}return"]
        return head + [f"{ind}items = {var}.items", f"{ind}if i < 0 or i >= len(items):",
                       f"{ind}    raise IndexError(i)"] + self.fresh(c, ind) + [f"{ind}items[i] = new", f"{ind}return"]

    def child_gen(self, c: int, depth: str) -> str:
        if self.is_term(c):
            return f"(_I{c} if not h else _G{c}(e, {depth}))"
        return f"_G{c}(e, {depth})"

    # -- node contract mixins ------------------------------------------------

    # Generation builds instances with object.__new__ plus slot stores, which
    # skips a Python-level __init__ frame per node; children are reached
    # through the module-level _G aliases rather than class attribute lookups.
    def gen_body(self, p: TypePlan) -> list[str]:
        nid, k, cls = p.node_id, p.kind, p.name
        I = "        "
        if k is Kind.TERMINAL:
            return [f"{I}return _I{nid}"]
        if k in (Kind.HEAD, Kind.CONCAT):
            out = [f"{I}d1 = d + 1", f"{I}o = _new({cls})"]
            for i, (c, ind) in enumerate(zip(p.children, p.indirect)):
                g = self.child_gen(c, "d1")
                out.append(f"{I}o._child_{i} = Cell({g})" if ind else f"{I}o.child_{i} = {g}")
            return out + [f"{I}return o"]
        if k is Kind.ALT:
            maxmd = max(self.md[c] for c in p.children)
            out = [f"{I}if d + {_num(maxmd)} <= e.limit:",
                   f"{I}    i = e.sampler.sample_alt({len(p.children)}, {nid})",
                   f"{I}else:",
                   f"{I}    i = e.steer_alt({nid}, d)",
                   f"{I}o = _new({cls})", f"{I}o.index = i"]
            field = "_value" if any(p.indirect) else "value"
            if len(p.children) <= _ALT_INLINE_MAX:
                for i, (c, ind) in enumerate(zip(p.children, p.indirect)):
                    g = self.child_gen(c, "d + 1")
                    store = f"o.{field} = Cell({g})" if ind else f"o.{field} = {g}"
                    if i == len(p.children) - 1:
                        out.append(f"{I}{store}")
                    else:
                        out += [f"{I}if i == {i}:", f"{I}    {store}", f"{I}    return o"]
            elif any(p.indirect):
                out += [f"{I}v = _V{nid}[i](e, d + 1)",
                        f"{I}o._value = Cell(v) if {cls}._INDIRECT[i] else v"]
            else:
                out.append(f"{I}o.value = _V{nid}[i](e, d + 1)")
            return out + [f"{I}return o"]
        # repetitions
        n = self.graph.nodes[nid]
        c = p.children[0]
        out = [f"{I}if d + {_num(self.md[c])} <= e.limit:",
               f"{I}    n = e.sampler.sample_rep({n.lo}, {n.hi}, {nid})",
               f"{I}else:",
               f"{I}    n = e.forced_rep({nid}, {n.lo})",
               f"{I}o = _new({cls})"]
        if k is Kind.OPTION:
            out.append(f"{I}o._value = Cell({self.child_gen(c, 'd + 1')}) if n else None")
        elif self.is_term(c):
            out += [f"{I}if not h:",
                    f"{I}    o.items = [_I{c}] * n",
                    f"{I}    return o",
                    f"{I}d1 = d + 1",
                    f"{I}o.items = [_G{c}(e, d1) for _ in range(n)]"]
        else:
            out += [f"{I}g = _G{c}",
                    f"{I}d1 = d + 1",
                    f"{I}o.items = [g(e, d1) for _ in range(n)]"]
        return out + [f"{I}return o"]

    def contract(self, p: TypePlan) -> list[str]:
        nid, k, cls = p.node_id, p.kind, p.name
        I, II = "    ", "        "
        out = [f"class _{cls}:", f'{I}"""Node contract of :class:`{cls}`."""', f"{I}__slots__ = ()", ""]
        out += [f"{I}def definition(self):", f"{II}return DEFS[{nid}]", ""]
        out += [f"{I}def opaque(self):", f"{II}return Opaque(self)", ""]
        out += [f"{I}def opaque_mut(self):", f"{II}return OpaqueMut(self)", ""]

        # generation
        out += [f"{I}@staticmethod", f"{I}def _gen(e, d):", f"{II}h = e.hooks",
                f"{II}if h and {nid} in h:", f"{II}    return e.hook({nid}, d)"]
        out += self.gen_body(p) + [""]
        out += [f"{I}@staticmethod", f"{I}def _expand(e, d):", f"{II}h = e.hooks"]
        out += self.gen_body(p) + [""]

        out += [f"{I}def _walk(self, p, k, end):"] + self.walk(nid, "self", II, 2) + [""]
        out += [f"{I}def _mutate(self, p, k, last, e):"] + self.walk(nid, "self", II, 4, mut=True) + [""]

        # children / set_child / visit_each / clone / _w
        if k is Kind.TERMINAL:
            out += [f"{I}def children(self):", f"{II}return ()", ""]
            out += [f"{I}def set_child(self, index, value):", f"{II}raise IndexError(index)", ""]
            out += [f"{I}def visit_each(self, visitor):", f"{II}return visitor", ""]
            out += [f"{I}def clone(self):", f"{II}return self", ""]
            out += [f"{I}def _w(self, out):", f"{II}out.append({self.lit(nid)})", ""]
        elif k in (Kind.HEAD, Kind.CONCAT):
            reads = [self.read(p, i) for i in range(len(p.children))]
            out += [f"{I}def children(self):", f"{II}return ({', '.join(reads)},)", ""]
            out += [f"{I}def set_child(self, index, value):"]
            for i in range(len(p.children)):
                out += [f"{II}if index == {i}:", f"{II}    self.child_{i} = value", f"{II}    return"]
            out += [f"{II}raise IndexError(index)", ""]
            out += [f"{I}def visit_each(self, visitor):"]
            for i, r in enumerate(reads):
                src = "visitor" if i == 0 else "r"
                out += [f"{II}r = {src}.visit({r}, {i})"]
                if i < len(reads) - 1:
                    out += [f"{II}if isinstance(r, Break):", f"{II}    return r"]
            out += [f"{II}return r", ""]
            clones = [r if self.is_term(c) else f"{r}.clone()" for r, c in zip(reads, p.children)]
            out += [f"{I}def clone(self):", f"{II}return {cls}({', '.join(clones)})", ""]
            out += [f"{I}def _w(self, out):"]
            for r, c in zip(reads, p.children):
                out.append(f"{II}out.append({self.lit(c)})" if self.is_term(c) else f"{II}{r}._w(out)")
            out.append("")
        elif k is Kind.ALT:
            out += [f"{I}def children(self):", f"{II}return (self.value,)", ""]
            out += [f"{I}def set_child(self, index, value):", f"{II}if index != 0:",
                    f"{II}    raise IndexError(index)", f"{II}self.value = value", ""]
            out += [f"{I}def visit_each(self, visitor):", f"{II}return visitor.visit(self.value, 0)", ""]
            out += [f"{I}def clone(self):", f"{II}return {cls}(self.index, self.value.clone())", ""]
            out += [f"{I}def _w(self, out):", f"{II}self.value._w(out)", ""]
        elif k is Kind.OPTION:
            c = p.children[0]
            out += [f"{I}def children(self):", f"{II}v = self._value",
                    f"{II}return () if v is None else (v.value,)", ""]
            out += [f"{I}def set_child(self, index, value):", f"{II}if index != 0 or self._value is None:",
                    f"{II}    raise IndexError(index)", f"{II}self._value.value = value", ""]
            out += [f"{I}def visit_each(self, visitor):", f"{II}v = self._value",
                    f"{II}return visitor if v is None else visitor.visit(v.value, 0)", ""]
            cl = "v.value" if self.is_term(c) else "v.value.clone()"
            out += [f"{I}def clone(self):", f"{II}v = self._value",
                    f"{II}return {cls}(None if v is None else {cl})", ""]
            out += [f"{I}def _w(self, out):", f"{II}v = self._value", f"{II}if v is not None:",
                    f"{II}    v.value._w(out)", ""]
        else:  # star, plus, range
            c = p.children[0]
            out += [f"{I}def children(self):", f"{II}return self.items", ""]
            out += [f"{I}def set_child(self, index, value):", f"{II}if index < 0:",
                    f"{II}    raise IndexError(index)", f"{II}self.items[index] = value", ""]
            out += [f"{I}def visit_each(self, visitor):", f"{II}for i, child in enumerate(self.items):",
                    f"{II}    visitor = visitor.visit(child, i)", f"{II}    if isinstance(visitor, Break):",
                    f"{II}        break", f"{II}return visitor", ""]
            if self.is_term(c):
                out += [f"{I}def clone(self):", f"{II}return {cls}(self.items[:])", ""]
                out += [f"{I}def _w(self, out):", f"{II}if self.items:",
                        f"{II}    out.append({self.lit(c)} * len(self.items))", ""]
            else:
                out += [f"{I}def clone(self):", f"{II}return {cls}([x.clone() for x in self.items])", ""]
                out += [f"{I}def _w(self, out):", f"{II}for x in self.items:", f"{II}    x._w(out)", ""]
        return out

    # -- concrete types ------------------------------------------------------

    def concrete(self, p: TypePlan) -> list[str]:
        nid, k, cls = p.node_id, p.kind, p.name
        I, II = "    ", "        "
        out = [f"class {cls}(_{cls}, Node):"]
        out += _docstring(p.doc, I)
        ann = [self.cls(c) for c in p.children]
        if k is Kind.TERMINAL:
            out += [f"{I}__slots__ = ()", f"{I}ID = {nid}", f"{I}DEF = DEFS[{nid}]",
                    f"{I}LITERAL = {self.lit(nid)}", ""]
            return out
        if k in (Kind.HEAD, Kind.CONCAT):
            slots = [f"_child_{i}" if ind else f"child_{i}" for i, ind in enumerate(p.indirect)]
            out += [f"{I}__slots__ = ({', '.join(repr(s) for s in slots)},)", f"{I}ID = {nid}",
                    f"{I}DEF = DEFS[{nid}]", ""]
            params = ", ".join(f"child_{i}: {a}" for i, a in enumerate(ann))
            out += [f"{I}def __init__(self, {params}):"]
            for i, ind in enumerate(p.indirect):
                out.append(f"{II}self._child_{i} = Cell(child_{i})" if ind else f"{II}self.child_{i} = child_{i}")
            out.append("")
            for i, ind in enumerate(p.indirect):
                if ind:
                    out += [f"{I}@property", f"{I}def child_{i}(self) -> {ann[i]}:",
                            f"{II}return self._child_{i}.value", "",
                            f"{I}@child_{i}.setter", f"{I}def child_{i}(self, value: {ann[i]}):",
                            f"{II}self._child_{i}.value = value", ""]
            return out
        if k is Kind.ALT:
            union = " | ".join(ann)
            if any(p.indirect):
                out += [f"{I}__slots__ = ('index', '_value')", f"{I}ID = {nid}", f"{I}DEF = DEFS[{nid}]",
                        f"{I}_INDIRECT = {tuple(p.indirect)!r}", ""]
                out += [f"{I}def __init__(self, index: int, value: {union}):", f"{II}self.index = index",
                        f"{II}self._value = Cell(value) if self._INDIRECT[index] else value", ""]
                out += [f"{I}@property", f"{I}def value(self) -> {union}:", f"{II}v = self._value",
                        f"{II}return v.value if self._INDIRECT[self.index] else v", "",
                        f"{I}@value.setter", f"{I}def value(self, value: {union}):",
                        f"{II}if self._INDIRECT[self.index]:", f"{II}    self._value.value = value",
                        f"{II}else:", f"{II}    self._value = value", ""]
            else:
                out += [f"{I}__slots__ = ('index', 'value')", f"{I}ID = {nid}", f"{I}DEF = DEFS[{nid}]", ""]
                out += [f"{I}def __init__(self, index: int, value: {union}):", f"{II}self.index = index",
                        f"{II}self.value = value", ""]
            return out
        if k is Kind.OPTION:
            out += [f"{I}__slots__ = ('_value',)", f"{I}ID = {nid}", f"{I}DEF = DEFS[{nid}]", ""]
            out += [f"{I}def __init__(self, value: {ann[0]} | None):",
                    f"{II}self._value = None if value is None else Cell(value)", ""]
            out += [f"{I}@property", f"{I}def value(self) -> {ann[0]} | None:", f"{II}v = self._value",
                    f"{II}return None if v is None else v.value", "",
                    f"{I}@value.setter", f"{I}def value(self, value: {ann[0]} | None):",
                    f"{II}self._value = None if value is None else Cell(value)", ""]
            return out
        out += [f"{I}__slots__ = ('items',)", f"{I}ID = {nid}", f"{I}DEF = DEFS[{nid}]", ""]
        out += [f"{I}def __init__(self, items: list[{ann[0]}]):", f"{II}self.items = items", ""]
        return out


def _header(graph: GrammarGraph) -> list[str]:
    out = [f'"""Derivation-tree types for the `{graph.name}` grammar.', "",
           "Generated by gramforge from the grammar source; do not edit by hand.", '"""', "",
           "from __future__ import annotations", "",
           "from math import inf", "",
           "from gramforge.generation import DepthExceeded",
           "from gramforge.graph import Edge, GraphNode, Kind",
           "from gramforge.runtime import Break, Cell, OpaqueMutRef, OpaqueRef, StaticNode", "",
           "_new = object.__new__",
           f"GRAMMAR_NAME = {graph.name!r}", f"START = {graph.start_node}", "", "DEFS = ("]
    for n in graph.nodes:
        out.append(f"    GraphNode({n.id}, Kind.{n.kind.name}, {n.rule!r}, {n.arity}, {n.name!r}, "
                   f"{n.literal!r}, {n.lo}, {n.hi!r}, {n.line}, {n.column}),")
    out += [")", "", "EDGES = ("]
    for e in graph.edges:
        out.append(f"    Edge({e.src}, {e.dst}, {e.index}, {e.label!r}, {e.indirect}),")
    out += [")", "", "",
            "class Node(StaticNode):",
            f'    """Common base of every `{graph.name}` node type."""',
            "    __slots__ = ()", "", ""]
    return out


def emit_node_contract(graph: GrammarGraph) -> str:
    """Per-node mixins implementing definition, traversal, cloning and generation."""
    em = _Emitter(graph)
    out: list[str] = []
    for p in em.plan.types:
        out += em.contract(p) + [""]
    return "\n".join(out)


def emit_types(graph: GrammarGraph) -> str:
    """One concrete class per node: fields, constructor and cell accessors."""
    em = _Emitter(graph)
    out: list[str] = []
    for p in em.plan.types:
        out += em.concrete(p) + [""]
    return "\n".join(out)


def emit_opaque(graph: GrammarGraph) -> str:
    """The immutable and mutable opaque views plus upcast/downcast helpers."""
    em = _Emitter(graph)
    names = ", ".join(p.name for p in em.plan.types)
    out = [
        "class Opaque(OpaqueRef):",
        f'    """Immutable view over any `{graph.name}` node."""',
        "    __slots__ = ()", "", "",
        "class OpaqueMut(OpaqueMutRef):",
        f'    """Mutable view over any `{graph.name}` node."""',
        "    __slots__ = ()", "", "",
        f"CLASSES = ({names},)",
        "Opaque.VARIANTS = OpaqueMut.VARIANTS = CLASSES",
        "Opaque._VARIANT_SET = OpaqueMut._VARIANT_SET = frozenset(CLASSES)", "", "",
        "def upcast(node) -> Opaque:", "    return Opaque(node)", "", "",
        "def upcast_mut(node) -> OpaqueMut:", "    return OpaqueMut(node)", "", "",
        "def downcast(view, cls):",
        '    """``view``\'s node when it is exactly a ``cls``, otherwise None."""',
        "    return view.downcast(cls)", "",
    ]
    return "\n".join(out)


def _footer(em: _Emitter) -> list[str]:
    out = ["Node.NAMESPACE = globals()", ""]
    out += [f"_G{p.node_id} = {p.name}._gen" for p in em.plan.types] + [""]
    out += [f"_W{p.node_id} = {p.name}._walk" for p in em.plan.types] + [""]
    out += [f"_M{p.node_id} = {p.name}._mutate" for p in em.plan.types] + [""]
    out += [f"_MD = ({', '.join(_num(m) for m in em.md)},)",
            f"_GT = ({', '.join(f'_G{p.node_id}' for p in em.plan.types)},)", "", "",
            "def _regen(e, c, d):",
            "    md = _MD[c]",
            "    if md == inf:",
            "        raise DepthExceeded(c)",
            "    if d + md - 1 > e.limit:",
            "        raise DepthExceeded(c, d, e.limit)",
            "    return _GT[c](e, d)", ""]
    for p in em.plan.types:
        if p.kind is Kind.TERMINAL:
            out.append(f"_I{p.node_id} = {p.name}.INSTANCE = {p.name}()")
    out.append("")
    for p in em.plan.types:
        if p.kind is Kind.ALT and len(p.children) > _ALT_INLINE_MAX:
            out.append(f"_V{p.node_id} = ({', '.join(f'_G{c}' for c in p.children)},)")
    out.append("")
    for p in em.plan.types:
        if p.children:
            out.append(f"{p.name}.CHILD_TYPES = ({', '.join(em.cls(c) for c in p.children)},)")
        else:
            out.append(f"{p.name}.CHILD_TYPES = ()")
    out.append("")
    return out


def emit_module(graph: GrammarGraph) -> str:
    """Complete, importable module text for ``graph`` (indirection already marked)."""
    em = _Emitter(graph)
    parts = ["\n".join(_header(graph)), emit_node_contract(graph), emit_types(graph),
             emit_opaque(graph), "\n".join(_footer(em))]
    text = "\n\n".join(parts)
    return re.sub(r"\n{4,}", "\n\n\n", text).rstrip() + "\n"


def manifest(graph: GrammarGraph) -> dict:
    plan = plan_emit(graph)
    return {
        "grammar": graph.name,
        "start": graph.start_node,
        "types": [{"id": p.node_id, "name": p.name, "kind": p.kind.value, "rule": graph.nodes[p.node_id].rule,
                   "shape": p.shape, "indirect_children": [i for i, ind in enumerate(p.indirect) if ind]}
                  for p in plan.types],
    }


_MODULE_CACHE: dict[str, types.ModuleType] = {}


def load_module(graph: GrammarGraph) -> types.ModuleType:
    """Emit, compile and execute the module for ``graph`` (cached by source hash)."""
    source = emit_module(graph)
    key = hashlib.sha256(source.encode()).hexdigest()
    mod = _MODULE_CACHE.get(key)
    if mod is None:
        name = f"gramforge_generated_{re.sub(r'[^0-9A-Za-z_]', '_', graph.name)}_{key[:12]}"
        mod = types.ModuleType(name)
        mod.__file__ = f"<{name}>"
        exec(compile(source, mod.__file__, "exec"), mod.__dict__)
        mod.SOURCE = source
        _MODULE_CACHE[key] = mod
    return mod


def dump_manifest(graph: GrammarGraph) -> str:
    return json.dumps(manifest(graph), indent=2) + "\n"
