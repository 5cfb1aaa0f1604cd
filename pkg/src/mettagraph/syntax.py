"""Atoms, expressions and the S-expression surface syntax.

Leaves are labels: :class:`Symbol`, :class:`Variable` (written ``$name``)
and :class:`Grounded` (numeric and string literals plus the names of
grounded functions).  Lists are :class:`Expr`.  :class:`Enriched` wraps an
expression with an enrichment payload; it is written with the reader
directive ``(!enrich <kind> <base64-payload> <expr>)``.
"""

from __future__ import annotations

import base64
import binascii
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from .errors import ParseError

__all__ = [
    "Symbol",
    "Variable",
    "Grounded",
    "Expr",
    "Enriched",
    "Expression",
    "Label",
    "CORE_GROUNDED",
    "parse",
    "parse_all",
    "format_expr",
    "literal_value",
    "make_literal",
    "is_literal",
    "variables",
    "free_variables",
    "is_ground",
    "sym",
    "var",
    "expr",
]


@dataclass(frozen=True)
class Symbol:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return "$" + self.name


@dataclass(frozen=True)
class Grounded:
    name: str

    def __str__(self) -> str:
        return self.name


Label = Union[Symbol, Variable, Grounded]


@dataclass(frozen=True, eq=False)
class Expr:
    children: tuple["Expression", ...]

    # Terms produced by evaluation share sub-terms heavily, so the hash is
    # cached and equality short-circuits on identity and hash.
    def __hash__(self) -> int:
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash(("Expr", self.children))
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return hash(self) == hash(other) and _same_structure(self, other)

    def __iter__(self) -> Iterator["Expression"]:
        return iter(self.children)

    def __len__(self) -> int:
        return len(self.children)

    def __getitem__(self, index: int) -> "Expression":
        return self.children[index]

    @property
    def head(self) -> "Expression | None":
        return self.children[0] if self.children else None

    def __str__(self) -> str:
        return format_expr(self)


def _same_structure(a: Expr, b: Expr) -> bool:
    """Structural equality that visits each pair of shared nodes once."""
    seen: set[tuple[int, int]] = set()
    stack: list[tuple[Expression, Expression]] = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y or (id(x), id(y)) in seen:
            continue
        seen.add((id(x), id(y)))
        if isinstance(x, Expr) and isinstance(y, Expr):
            if len(x.children) != len(y.children) or hash(x) != hash(y):
                return False
            stack.extend(zip(x.children, y.children))
        elif x != y:
            return False
    return True


@dataclass(frozen=True)
class Enriched:
    inner: "Expression"
    kind: str
    payload: bytes

    def __str__(self) -> str:
        return format_expr(self)


Expression = Union[Symbol, Variable, Grounded, Expr, Enriched]

# Names parsed as grounded function symbols unless a reader is given its own set.
CORE_GROUNDED = frozenset(
    {
        "+", "-", "*", "/", "%",
        "<", ">", "<=", ">=", "==",
        "concat", "string-length",
        "match", "transform", "matchEV", "quote",
    }
)

_INT_RE = re.compile(r"[+-]?\d+\Z")
_FLOAT_RE = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?\Z")
_DELIMS = set("()\";")


def sym(name: str) -> Symbol:
    return Symbol(name)


def var(name: str) -> Variable:
    return Variable(name.lstrip("$"))


def expr(*children: "Expression | str") -> Expr:
    """Build an :class:`Expr`; plain strings become symbols (``$x`` a variable)."""
    out = []
    for c in children:
        if isinstance(c, str):
            c = var(c) if c.startswith("$") else Symbol(c)
        out.append(c)
    return Expr(tuple(out))


def is_literal(label: object) -> bool:
    """True for grounded numeric or string literals."""
    if not isinstance(label, Grounded):
        return False
    n = label.name
    return n.startswith('"') or bool(_INT_RE.match(n) or _FLOAT_RE.match(n))


def literal_value(label: Grounded) -> int | float | str:
    n = label.name
    if n.startswith('"'):
        return _unescape(n[1:-1])
    if _INT_RE.match(n):
        return int(n)
    if _FLOAT_RE.match(n):
        return float(n)
    raise ValueError(f"{n!r} is not a literal")


def make_literal(value: int | float | str | bool) -> Expression:
    if isinstance(value, bool):
        return Symbol("True" if value else "False")
    if isinstance(value, str):
        return Grounded('"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"')
    return Grounded(repr(value))


_NO_VARS: frozenset[str] = frozenset()


def free_variables(e: Expression) -> frozenset[str]:
    """Names of all variables occurring in ``e``, cached on compound terms."""
    if isinstance(e, Variable):
        return frozenset((e.name,))
    if not isinstance(e, (Expr, Enriched)):
        return _NO_VARS
    cached = e.__dict__.get("_vars")
    if cached is not None:
        return cached
    # post-order without recursion: terms can be very deep
    stack: list[tuple[Expression, bool]] = [(e, False)]
    while stack:
        x, ready = stack.pop()
        if not isinstance(x, (Expr, Enriched)) or "_vars" in x.__dict__:
            continue
        kids = x.children if isinstance(x, Expr) else (x.inner,)
        if not ready:
            stack.append((x, True))
            stack.extend((k, False) for k in kids)
            continue
        names: set[str] = set()
        for k in kids:
            names |= free_variables(k) if not isinstance(k, (Expr, Enriched)) else k.__dict__["_vars"]
        object.__setattr__(x, "_vars", frozenset(names) if names else _NO_VARS)
    return e.__dict__["_vars"]


def is_ground(e: Expression) -> bool:
    return not free_variables(e)


def variables(e: Expression) -> set[str]:
    """Names of all variables occurring in ``e``."""
    return set(free_variables(e))


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(body[i + 1])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


# -- reader -----------------------------------------------------------------


def _tokens(text: str) -> Iterator[tuple[str, int, int]]:
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
        elif ch.isspace():
            i += 1
            col += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch, line, col
            i += 1
            col += 1
        elif ch == '"':
            start, sline, scol = i, line, col
            i += 1
            col += 1
            while True:
                if i >= n:
                    raise ParseError("unterminated string literal", sline, scol)
                c = text[i]
                if c == "\\":
                    if i + 1 >= n or text[i + 1] not in '"\\':
                        raise ParseError("bad escape in string literal", line, col)
                    i += 2
                    col += 2
                    continue
                if c == "\n":
                    line, col = line + 1, 0
                i += 1
                col += 1
                if c == '"':
                    break
            yield text[start:i], sline, scol
        else:
            start, scol = i, col
            while i < n and not text[i].isspace() and text[i] not in _DELIMS:
                i += 1
                col += 1
            yield text[start:i], line, scol


def _atom(tok: str, line: int, col: int, grounded: frozenset[str]) -> Expression:
    if tok.startswith('"'):
        return Grounded(tok)
    if tok.startswith("$"):
        if len(tok) == 1:
            raise ParseError("empty variable name", line, col)
        return Variable(tok[1:])
    if _INT_RE.match(tok) or _FLOAT_RE.match(tok) or tok in grounded:
        return Grounded(tok)
    return Symbol(tok)


def _read(tokens: list[tuple[str, int, int]], grounded: frozenset[str]) -> list[Expression]:
    out: list[Expression] = []
    stack: list[tuple[list, int, int]] = []
    for tok, line, col in tokens:
        if tok == "(":
            stack.append(([], line, col))
        elif tok == ")":
            if not stack:
                raise ParseError("unexpected ')'", line, col)
            items, oline, ocol = stack.pop()
            node = _close(items, oline, ocol)
            (stack[-1][0] if stack else out).append(node)
        else:
            node = _atom(tok, line, col, grounded)
            (stack[-1][0] if stack else out).append(node)
    if stack:
        _, line, col = stack[-1]
        raise ParseError("unclosed '('", line, col)
    return out


def _close(items: list, line: int, col: int) -> Expression:
    if items and items[0] == Symbol("!enrich"):
        if len(items) != 4:
            raise ParseError("!enrich takes <kind> <payload> <expr>", line, col)
        kind_tok, payload_tok, inner = items[1:]
        if isinstance(kind_tok, Grounded) and kind_tok.name.startswith('"'):
            kind = literal_value(kind_tok)
        elif isinstance(kind_tok, (Symbol, Grounded)):
            kind = kind_tok.name
        else:
            raise ParseError("bad enrichment kind", line, col)
        if not isinstance(payload_tok, (Symbol, Grounded)):
            raise ParseError("bad enrichment payload", line, col)
        raw = payload_tok.name
        if raw.startswith('"'):
            raw = literal_value(payload_tok)
        try:
            payload = base64.b64decode(raw, validate=True)
        except (binascii.Error, ValueError):
            raise ParseError("payload is not valid base64", line, col) from None
        return Enriched(inner, str(kind), payload)
    return Expr(tuple(items))


def parse_all(text: str, grounded: Iterable[str] = CORE_GROUNDED) -> list[Expression]:
    """Parse every top-level expression in ``text``."""
    return _read(list(_tokens(text)), frozenset(grounded))


def parse(text: str, grounded: Iterable[str] = CORE_GROUNDED) -> Expression:
    """Parse exactly one expression."""
    toks = list(_tokens(text))
    items = _read(toks, frozenset(grounded))
    if len(items) != 1:
        line, col = (toks[0][1], toks[0][2]) if toks else (1, 1)
        raise ParseError(f"expected one expression, found {len(items)}", line, col)
    return items[0]


# -- printer ----------------------------------------------------------------


def format_expr(e: Expression, limit: int | None = None) -> str:
    """S-expression text of ``e``; with ``limit``, cut off after about that
    many characters and end with ``...``."""
    parts: list[str] = []
    budget = [limit if limit is not None else -1]
    try:
        _emit(e, parts, budget)
    except _Truncated:
        return "".join(parts)[:limit] + "..."
    return "".join(parts)


class _Truncated(Exception):
    pass


def _put(out: list[str], text: str, budget: list[int]) -> None:
    out.append(text)
    if budget[0] >= 0:
        budget[0] -= len(text)
        if budget[0] < 0:
            raise _Truncated


def _emit(e: Expression, out: list[str], budget: list[int]) -> None:
    if isinstance(e, Expr):
        _put(out, "(", budget)
        for i, c in enumerate(e.children):
            if i:
                _put(out, " ", budget)
            _emit(c, out, budget)
        _put(out, ")", budget)
    elif isinstance(e, Enriched):
        kind = e.kind.replace("\\", "\\\\").replace('"', '\\"')
        payload = base64.b64encode(e.payload).decode() or '""'
        _put(out, f'(!enrich "{kind}" {payload} ', budget)
        _emit(e.inner, out, budget)
        _put(out, ")", budget)
    else:
        _put(out, str(e), budget)
