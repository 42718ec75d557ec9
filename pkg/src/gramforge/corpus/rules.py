"""Semantic constraints for the bundled XML and mini-C grammars."""

from __future__ import annotations

from ..evolution.constraints import ConstraintResult, register_constraint

C_KEYWORDS = frozenset(
    "auto break case char const continue default do double else enum extern float for goto if "
    "inline int long register restrict return short signed sizeof static struct switch typedef "
    "union unsigned void volatile while".split())


def _ident(index, i, rule="identifier"):
    """Text of the first ``rule`` instance below entry ``i``, and its entry."""
    j = index.first_child_instance(i, rule)
    return index.text(j).decode(), j


def _minic_events(index):
    """Declarations and uses in textual order.

    Yields ``(position, kind, name, entry)`` with kind one of ``global``,
    ``function``, ``local`` (the declaration takes effect after its
    initializer) and ``use``.
    """
    ev = []
    for i in index.instances("global_decl"):
        name, j = _ident(index, i)
        ev.append((index.end[i], "global", name, j))
    for i in index.instances("function"):
        name, j = _ident(index, i)
        ev.append((j, "function", name, j))
    for i in index.instances("local_decl"):
        name, j = _ident(index, i)
        ev.append((index.end[i], "local", name, j))
    for i in index.instances("assignment"):
        name, j = _ident(index, i)
        ev.append((j, "use", name, j))
    ident = index.head_id("identifier")
    for i in index.instances("factor"):
        j = i + 2  # factor head, its alternation, then the chosen variant
        if j < len(index) and index.ids[j] == ident and index.parent[j] == i + 1:
            ev.append((j, "use", index.text(j).decode(), i))
    ev.sort(key=lambda e: (e[0], e[1] == "use"))
    return ev


def _fraction(ok: int, total: int, bad) -> ConstraintResult:
    if total == 0 or ok == total:
        return ConstraintResult(1.0)
    return ConstraintResult(ok / total, tuple(bad))


_MINIC_RULES = ("global_decl", "function", "local_decl", "assignment", "factor", "identifier")
_XML_RULES = ("xml_tree", "xml_open_tag", "xml_openclose_tag", "xml_close_tag", "attribute", "id")


@register_constraint("minic_declared_before_use", _MINIC_RULES)
def declared_before_use(index):
    """Every variable read or assigned was declared earlier (not the function name)."""
    declared: set[str] = set()
    uses = ok = 0
    bad = []
    for _, kind, name, entry in _minic_events(index):
        if kind in ("global", "local"):
            declared.add(name)
        elif kind == "use":
            uses += 1
            if name in declared:
                ok += 1
            else:
                bad.append(index.path(entry))
    return _fraction(ok, uses, bad)


@register_constraint("minic_no_redeclaration", _MINIC_RULES)
def no_redeclaration(index):
    """Names are unique among globals plus the function, and among locals."""
    scopes: dict[str, set[str]] = {"global": set(), "local": set()}
    decls = ok = 0
    bad = []
    for _, kind, name, entry in _minic_events(index):
        if kind == "use":
            continue
        scope = scopes["local" if kind == "local" else "global"]
        decls += 1
        if name in scope:
            bad.append(index.path(entry))
        else:
            ok += 1
            scope.add(name)
    return _fraction(ok, decls, bad)


@register_constraint("minic_no_reserved_keywords", ("identifier",))
def no_reserved_keywords(index):
    """No identifier spells a C keyword."""
    inst = index.instances("identifier")
    bad = [index.path(i) for i in inst if index.text(i).decode() in C_KEYWORDS]
    return _fraction(len(inst) - len(bad), len(inst), bad)


@register_constraint("xml_tags_match", _XML_RULES)
def xml_tags_match(index):
    """Each closing tag names the element opened by its sibling opening tag."""
    trees = [i for i in index.instances("xml_tree") if index.count_within(i, "xml_close_tag")]
    total = ok = 0
    bad = []
    for i in trees:
        opened = index.first_child_instance(i, "xml_open_tag")
        if opened is None or opened != i + 3:  # head, alternation, sequence, open tag
            continue
        close = index.descendants(i, "xml_close_tag")
        close = [c for c in close if index.parent[c] == i + 2]
        if not close:
            continue
        total += 1
        a, _ = _ident(index, opened, "id")
        b, j = _ident(index, close[0], "id")
        if a == b:
            ok += 1
        else:
            bad.append(index.path(j))
    return _fraction(ok, total, bad)


@register_constraint("xml_unique_attributes", _XML_RULES)
def xml_unique_attributes(index):
    """No tag repeats an attribute name."""
    total = ok = 0
    bad = []
    for rule in ("xml_open_tag", "xml_openclose_tag"):
        for i in index.instances(rule):
            attrs = index.descendants(i, "attribute")
            seen = set()
            for a in attrs:
                name, j = _ident(index, a, "id")
                total += 1
                if name in seen:
                    bad.append(index.path(a))
                else:
                    ok += 1
                    seen.add(name)
    return _fraction(ok, total, bad)
