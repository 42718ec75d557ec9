"""Textual grammar format (``.gbnf``) and its abstract syntax tree.

A grammar file is a sequence of rules::

    # comments run to the end of the line
    <start>  ::= <expr>
    <expr>   ::= <number> "+" <expr> | <number>
    <number> ::= "0" | <non_zero> <digit>*

Juxtaposition concatenates, ``|`` alternates, and ``*``, ``+``, ``?`` and
``{lo,hi}`` repeat.  ``{lo,hi}`` is half-open, so ``{1,3}`` means one or two
repetitions; ``{n}`` is shorthand for ``{n,n+1}``.  The first rule is the
start symbol unless a ``start = <name>`` directive says otherwise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Union

__all__ = [
    "Expr", "Reference", "Terminal", "Concat", "Alt", "Star", "Plus", "Range", "Option",
    "GrammarAst", "RuleSource",
    "GrammarError", "GrammarSyntaxError", "UndefinedNonterminal", "DuplicateRule",
    "EmptyAlternation", "EmptyConcat",
    "parse_grammar", "load_grammar", "format_grammar", "format_expr",
    "escape_bytes", "validate_reachability", "iter_references",
]

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class GrammarError(ValueError):
    """Base class for everything :func:`parse_grammar` can raise."""


class GrammarSyntaxError(GrammarError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class EmptyAlternation(GrammarSyntaxError):
    pass


class EmptyConcat(GrammarSyntaxError):
    pass


class UndefinedNonterminal(GrammarError):
    def __init__(self, name: str):
        super().__init__(f"reference to undefined nonterminal <{name}>")
        self.name = name


class DuplicateRule(GrammarError):
    def __init__(self, name: str):
        super().__init__(f"nonterminal <{name}> is defined more than once")
        self.name = name


# Expression tree.  Positions are kept for generated documentation but do not
# take part in equality, so a reformatted grammar compares equal.

@dataclass(frozen=True)
class Reference:
    name: str
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Terminal:
    value: bytes
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Concat:
    children: tuple["Expr", ...]
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Alt:
    children: tuple["Expr", ...]
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Star:
    inner: "Expr"
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Plus:
    inner: "Expr"
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Range:
    """Between ``lo`` (inclusive) and ``hi`` (exclusive) repetitions."""

    inner: "Expr"
    lo: int
    hi: int
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Option:
    inner: "Expr"
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


Expr = Union[Reference, Terminal, Concat, Alt, Star, Plus, Range, Option]


@dataclass(frozen=True)
class RuleSource:
    line: int
    column: int
    text: str


@dataclass(frozen=True)
class GrammarAst:
    rules: dict[str, Expr]
    start: str
    sources: dict[str, RuleSource] = field(default_factory=dict, compare=False, repr=False)
    name: str = field(default="grammar", compare=False)

    def __post_init__(self):
        if self.start not in self.rules:
            raise UndefinedNonterminal(self.start)
        for rule, body in self.rules.items():
            if not NAME_RE.fullmatch(rule):
                raise GrammarError(f"invalid rule name {rule!r}")
            for ref in iter_references(body):
                if ref.name not in self.rules:
                    raise UndefinedNonterminal(ref.name)


def iter_references(expr: Expr) -> Iterator[Reference]:
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, Reference):
            yield e
        elif isinstance(e, (Concat, Alt)):
            stack.extend(reversed(e.children))
        elif isinstance(e, (Star, Plus, Range, Option)):
            stack.append(e.inner)


# --- lexer -------------------------------------------------------------------

_ESCAPES = {"n": b"\n", "t": b"\t", "r": b"\r", "\\": b"\\", '"': b'"'}
_PUNCT = set("|()*+?{},=")


@dataclass
class _Token:
    kind: str  # RULE REF STR INT IDENT EOF or a punctuation character
    value: object
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, line_start = 0, 1, 0
    n = len(text)

    def err(msg: str, at: int) -> GrammarSyntaxError:
        return GrammarSyntaxError(line, at - line_start + 1, msg)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            line_start = i
            continue
        if c in " \t\r":
            i += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        col = i - line_start + 1
        if c == "<":
            m = NAME_RE.match(text, i + 1)
            if not m or m.end() >= n or text[m.end()] != ">":
                raise err("malformed nonterminal, expected <name>", i)
            name = m.group()
            i = m.end() + 1
            # One character of lexical lookahead decides rule head vs. reference.
            j = i
            while j < n and text[j] in " \t\r":
                j += 1
            if text.startswith("::=", j):
                tokens.append(_Token("RULE", name, line, col))
                i = j + 3
            else:
                tokens.append(_Token("REF", name, line, col))
            continue
        if c == '"':
            buf = bytearray()
            opened = i
            i += 1
            while True:
                if i >= n or text[i] == "\n":
                    raise err("unterminated string literal", opened)
                ch = text[i]
                if ch == '"':
                    i += 1
                    break
                if ch == "\\":
                    if i + 1 >= n:
                        raise err("unterminated escape", i)
                    e = text[i + 1]
                    if e in _ESCAPES:
                        buf += _ESCAPES[e]
                        i += 2
                    elif e == "x":
                        hexd = text[i + 2:i + 4]
                        if len(hexd) != 2 or not all(h in "0123456789abcdefABCDEF" for h in hexd):
                            raise err("\\x escape needs two hex digits", i)
                        buf.append(int(hexd, 16))
                        i += 4
                    else:
                        raise err(f"unknown escape \\{e}", i)
                    continue
                buf += ch.encode("utf-8")
                i += 1
            tokens.append(_Token("STR", bytes(buf), line, col))
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("INT", int(text[i:j]), line, col))
            i = j
            continue
        m = NAME_RE.match(text, i)
        if m:
            tokens.append(_Token("IDENT", m.group(), line, col))
            i = m.end()
            continue
        if c in _PUNCT:
            tokens.append(_Token(c, c, line, col))
            i += 1
            continue
        raise err(f"unexpected character {c!r}", i)
    tokens.append(_Token("EOF", None, line, i - line_start + 1))
    return tokens


# --- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.lines = text.split("\n")
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.toks[self.i]

    def take(self) -> _Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> _Token:
        t = self.take()
        if t.kind != kind:
            raise GrammarSyntaxError(t.line, t.col, f"expected {kind!r}, found {_describe(t)}")
        return t

    def parse(self, name: str) -> GrammarAst:
        rules: dict[str, Expr] = {}
        sources: dict[str, RuleSource] = {}
        start = None
        while self.peek().kind != "EOF":
            t = self.take()
            if t.kind == "IDENT" and t.value == "start":
                self.expect("=")
                ref = self.expect("REF")
                start = ref.value
            elif t.kind == "RULE":
                if t.value in rules:
                    raise DuplicateRule(t.value)
                body = self.alternation(t)
                rules[t.value] = body
                last = self.toks[self.i - 1]
                sources[t.value] = RuleSource(t.line, t.col, self._slice(t, last))
            else:
                raise GrammarSyntaxError(t.line, t.col, f"expected a rule, found {_describe(t)}")
        if not rules:
            raise GrammarSyntaxError(1, 1, "grammar defines no rules")
        if start is None:
            start = next(iter(rules))
        return GrammarAst(rules, start, sources, name)

    def _slice(self, first: _Token, last: _Token) -> str:
        if first.line == last.line:
            return self.lines[first.line - 1][first.col - 1:].rstrip()
        return "\n".join(l.rstrip() for l in self.lines[first.line - 1:last.line])

    def alternation(self, at: _Token) -> Expr:
        branches = [self.concatenation(at)]
        while self.peek().kind == "|":
            bar = self.take()
            branches.append(self.concatenation(bar))
        if len(branches) == 1:
            return branches[0]
        return Alt(tuple(branches), branches[0].pos)

    def concatenation(self, at: _Token) -> Expr:
        items = []
        while self.peek().kind in ("REF", "STR", "("):
            items.append(self.postfix())
        if not items:
            t = self.peek()
            if at.kind == "|" or t.kind == "|":
                raise EmptyAlternation(t.line, t.col, f"empty alternative after {_describe(at)}")
            raise EmptyConcat(t.line, t.col, f"empty sequence after {_describe(at)}")
        if len(items) == 1:
            return items[0]
        return Concat(tuple(items), items[0].pos)

    def postfix(self) -> Expr:
        e = self.atom()
        while True:
            t = self.peek()
            if t.kind == "*":
                self.take()
                e = Star(e, e.pos)
            elif t.kind == "+":
                self.take()
                e = Plus(e, e.pos)
            elif t.kind == "?":
                self.take()
                e = Option(e, e.pos)
            elif t.kind == "{":
                self.take()
                lo = self.expect("INT").value
                if self.peek().kind == ",":
                    self.take()
                    hi_tok = self.expect("INT")
                    hi = hi_tok.value
                    if hi <= lo:
                        raise GrammarSyntaxError(hi_tok.line, hi_tok.col,
                                                 f"range upper bound {hi} must exceed lower bound {lo}")
                else:
                    hi = lo + 1
                self.expect("}")
                e = Range(e, lo, hi, e.pos)
            else:
                return e

    def atom(self) -> Expr:
        t = self.take()
        if t.kind == "REF":
            return Reference(t.value, (t.line, t.col))
        if t.kind == "STR":
            return Terminal(t.value, (t.line, t.col))
        if t.kind == "(":
            if self.peek().kind == ")":
                raise EmptyAlternation(t.line, t.col, "empty group")
            inner = self.alternation(t)
            self.expect(")")
            return inner
        raise GrammarSyntaxError(t.line, t.col, f"expected an expression, found {_describe(t)}")


def _describe(t: _Token) -> str:
    if t.kind == "EOF":
        return "end of input"
    if t.kind == "RULE":
        return f"rule <{t.value}>"
    if t.kind == "REF":
        return f"<{t.value}>"
    if t.kind == "STR":
        return f'"{escape_bytes(t.value)}"'
    return repr(t.value)


def parse_grammar(text: bytes | str, name: str = "grammar") -> GrammarAst:
    """Parse grammar source into a validated :class:`GrammarAst`."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GrammarSyntaxError(1, exc.start + 1, "grammar is not valid UTF-8") from None
    return _Parser(text).parse(name)


def load_grammar(path: str | Path) -> GrammarAst:
    path = Path(path)
    return parse_grammar(path.read_bytes(), name=path.stem)


# --- pretty printing ---------------------------------------------------------

def escape_bytes(value: bytes) -> str:
    out = []
    for b in value:
        if b == 0x0A:
            out.append("\\n")
        elif b == 0x09:
            out.append("\\t")
        elif b == 0x0D:
            out.append("\\r")
        elif b == 0x5C:
            out.append("\\\\")
        elif b == 0x22:
            out.append('\\"')
        elif 0x20 <= b < 0x7F:
            out.append(chr(b))
        else:
            out.append(f"\\x{b:02x}")
    return "".join(out)


def _prec(e: Expr) -> int:
    if isinstance(e, Alt):
        return 0
    if isinstance(e, Concat):
        return 1
    if isinstance(e, (Star, Plus, Range, Option)):
        return 2
    return 3


def format_expr(e: Expr) -> str:
    def wrap(child: Expr, min_prec: int) -> str:
        s = format_expr(child)
        return f"({s})" if _prec(child) < min_prec else s

    if isinstance(e, Reference):
        return f"<{e.name}>"
    if isinstance(e, Terminal):
        return f'"{escape_bytes(e.value)}"'
    if isinstance(e, Alt):
        return " | ".join(wrap(c, 1) for c in e.children)
    if isinstance(e, Concat):
        return " ".join(wrap(c, 2) for c in e.children)
    if isinstance(e, Star):
        return wrap(e.inner, 2) + "*"
    if isinstance(e, Plus):
        return wrap(e.inner, 2) + "+"
    if isinstance(e, Option):
        return wrap(e.inner, 2) + "?"
    if isinstance(e, Range):
        return wrap(e.inner, 2) + f"{{{e.lo},{e.hi}}}"
    raise TypeError(f"not a grammar expression: {e!r}")


def format_grammar(ast: GrammarAst) -> str:
    lines = []
    if ast.start != next(iter(ast.rules)):
        lines.append(f"start = <{ast.start}>")
    for name, body in ast.rules.items():
        lines.append(f"<{name}> ::= {format_expr(body)}")
    return "\n".join(lines) + "\n"


def validate_reachability(ast: GrammarAst) -> list[str]:
    """Return one warning per rule that cannot be reached from the start rule."""
    seen = {ast.start}
    todo = [ast.start]
    while todo:
        for ref in iter_references(ast.rules[todo.pop()]):
            if ref.name not in seen:
                seen.add(ref.name)
                todo.append(ref.name)
    return [f"rule <{name}> is unreachable from <{ast.start}>"
            for name in ast.rules if name not in seen]
