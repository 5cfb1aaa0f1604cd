"""Type facts, the inheritance preorder, and arrow-application checking.

Type facts are the ``(: subject type)`` roots of a space.  A fact
``(: A B)`` is read as subtyping ``A < B`` when ``A`` is itself a type,
i.e. it is declared with a kind keyword (``(: A Type)``) or something is
declared to have type ``A``.  Otherwise it records membership only, so
``(: Bob Human)`` makes Bob an inhabitant of Human, not a subtype.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .metagraph import TYPE_OF, Metagraph
from .syntax import Expr, Expression, Symbol, is_literal, literal_value

__all__ = [
    "TYPE",
    "ARROW",
    "KIND_KEYWORDS",
    "Outcome",
    "TypeCheck",
    "TypeSystem",
    "type_system",
    "types_of",
    "inherits",
    "check_application",
    "check_call",
]

TYPE = Symbol("Type")
ARROW = Symbol("->")
KIND_KEYWORDS = frozenset({TYPE, Symbol("Enrichment")})
NUMBER = Symbol("Number")
STRING = Symbol("String")


class Outcome(enum.Enum):
    OK = "ok"
    UNDEFINED = "undefined"
    ERROR = "type-error"


@dataclass(frozen=True)
class TypeCheck:
    outcome: Outcome
    type: Expression | None = None
    expected: tuple[Expression, ...] = ()
    actual: tuple[Expression, ...] = ()

    @property
    def ok(self) -> bool:
        return self.outcome is Outcome.OK


UNDEFINED = TypeCheck(Outcome.UNDEFINED)


def is_type_fact(e: Expression) -> bool:
    return isinstance(e, Expr) and len(e) == 3 and e[0] == TYPE_OF


def is_arrow(t: Expression) -> bool:
    return isinstance(t, Expr) and len(t) >= 2 and t[0] == ARROW


@dataclass
class TypeSystem:
    """Snapshot of the type facts of one space."""

    facts: list[tuple[Expression, Expression]]
    _declared: dict[Expression, list[Expression]] = field(init=False)
    _supers: dict[Expression, set[Expression]] = field(init=False)
    _reach: dict[Expression, frozenset[Expression]] = field(init=False, default_factory=dict)

    def __post_init__(self) -> None:
        declared: dict[Expression, list[Expression]] = defaultdict(list)
        for subj, typ in self.facts:
            if typ not in declared[subj]:
                declared[subj].append(typ)
        self._declared = dict(declared)
        types = {b for _, b in self.facts} | {a for a, b in self.facts if b in KIND_KEYWORDS}
        self._supers = defaultdict(set)
        for a, b in self.facts:
            if a in types and a != b:
                self._supers[a].add(b)

    @classmethod
    def from_space(cls, space: Metagraph) -> "TypeSystem":
        facts = []
        for r in space.roots:
            e = space.lift(r)
            if is_type_fact(e):
                facts.append((e[1], e[2]))
        return cls(facts)

    def declared_types(self, subject: Expression) -> list[Expression]:
        return list(self._declared.get(subject, ()))

    def types_of(self, subject: Expression) -> list[Expression]:
        """Declared types of ``subject`` plus the implicit type of literals."""
        out = self.declared_types(subject)
        if is_literal(subject):
            implicit = STRING if isinstance(literal_value(subject), str) else NUMBER
            if implicit not in out:
                out.append(implicit)
        return out

    def supertypes(self, t: Expression) -> frozenset[Expression]:
        """Every type reachable from ``t`` (including ``t``)."""
        cached = self._reach.get(t)
        if cached is not None:
            return cached
        seen = {t}
        stack = [t]
        while stack:
            for s in self._supers.get(stack.pop(), ()):
                if s not in seen:
                    seen.add(s)
                    stack.append(s)
        out = frozenset(seen)
        self._reach[t] = out
        return out

    def inherits(self, sub: Expression, sup: Expression) -> bool:
        return sub == sup or sup in self.supertypes(sub)

    def infer(self, e: Expression) -> list[Expression]:
        """Declared types of ``e``, or the result types of ``e`` as an application."""
        out = self.types_of(e)
        if not out and isinstance(e, Expr) and len(e) >= 2:
            res = self.check_call(e[0], e.children[1:])
            if res.ok:
                out = [res.type]
        return out

    def check_application(self, fn: Expression, arg: Expression) -> TypeCheck:
        arrows = [t for t in self.types_of(fn) if is_arrow(t)]
        if not arrows:
            return UNDEFINED
        return _check_against(self, arrows, arg)

    def check_call(self, fn: Expression, args: Sequence[Expression]) -> TypeCheck:
        """Check a curried application ``(fn a1 a2 ...)`` left to right."""
        if not args:
            return UNDEFINED
        current: list[Expression] = [t for t in self.types_of(fn) if is_arrow(t)]
        if not current:
            return UNDEFINED
        result: TypeCheck = UNDEFINED
        for arg in args:
            arrows = [t for t in current if is_arrow(t)]
            if not arrows:
                # more arguments than the arrow accepts
                return TypeCheck(Outcome.ERROR, None, (), tuple(self.infer(arg)))
            result = _check_against(self, arrows, arg)
            if not result.ok:
                return result
            current = [result.type]
        return result


def _check_against(ts: TypeSystem, arrows: Iterable[Expression], arg: Expression) -> TypeCheck:
    arg_types = ts.infer(arg)
    if not arg_types:
        return UNDEFINED
    expected = []
    for arrow in arrows:
        want = arrow[1]
        expected.append(want)
        if any(ts.inherits(t, want) for t in arg_types):
            rest = arrow.children[2:]
            return TypeCheck(Outcome.OK, rest[0] if len(rest) == 1 else Expr((ARROW,) + rest))
    return TypeCheck(Outcome.ERROR, None, tuple(expected), tuple(arg_types))


def type_system(space: Metagraph) -> TypeSystem:
    """The (cached) type system of ``space``; rebuilt after type-fact changes."""
    cached = space._cache.get("types")
    if cached is not None and cached[0] == space.type_epoch:
        return cached[1]
    ts = TypeSystem.from_space(space)
    space._cache["types"] = (space.type_epoch, ts)
    return ts


def types_of(space: Metagraph, edge_id: int) -> list[Expression]:
    return type_system(space).types_of(space.lift(edge_id))


def inherits(space: Metagraph, sub: Expression, sup: Expression) -> bool:
    return type_system(space).inherits(sub, sup)


def check_application(space: Metagraph, fn_id: int, arg_id: int) -> TypeCheck:
    return type_system(space).check_application(space.lift(fn_id), space.lift(arg_id))


def check_call(space: Metagraph, fn: Expression, args: Sequence[Expression]) -> TypeCheck:
    return type_system(space).check_call(fn, args)
