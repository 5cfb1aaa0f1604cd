"""Nondeterministic evaluation of expressions against a space.

Evaluation of an expression ``e``:

* ``(@ X)`` evaluates ``X``;
* an application whose head is a grounded function runs the function on the
  (evaluated, unless the function quotes its arguments) arguments, after an
  arrow-type check of the call;
* otherwise every equality ``(= A B)`` of the space whose ``A`` unifies with
  ``e`` contributes the evaluation of the instantiated ``B``;
* if none applies, the children are evaluated and the rebuilt expressions
  evaluated again; an expression that does not change is a normal form.

Results come back as an ordered list without duplicates.  Every call of the
evaluator consumes one unit of fuel.
"""

from __future__ import annotations

import enum
import itertools
import operator
import sys
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .enrichments import EnrichmentRegistry, default_registry
from .errors import (
    EvaluationError,
    FuelExhausted,
    GroundedFault,
    NotActivatedError,
    UnknownGroundedError,
)
from .matcher import Bindings, match, match_enriched, substitute, transform, unify
from .metagraph import Metagraph
from .syntax import (
    Enriched,
    Expr,
    Expression,
    Grounded,
    Symbol,
    Variable,
    format_expr,
    is_literal,
    literal_value,
    make_literal,
    parse,
    parse_all,
    variables,
)
from .trace import Trace, Tracer
from .typesystem import Outcome, is_arrow, type_system

__all__ = [
    "DEFAULT_FUEL",
    "INHABITED_RULE",
    "GroundedFunction",
    "GroundingRegistry",
    "core_registry",
    "Interpreter",
    "evaluate",
    "equality_query",
    "check_inhabited",
    "activate",
    "run_with_trace",
    "error_value",
    "EvalTask",
    "TaskStatus",
]

DEFAULT_FUEL = 10_000

EQUALS = Symbol("=")
ACTIVATE = Symbol("@")
SELF = Symbol("&self")
LISTED = Symbol("?")
TRUE = Symbol("True")
ERROR = Symbol("Error")
BAD_TYPE = Symbol("BadType")

# A type is inhabited when some expression is declared to have it.
INHABITED_RULE = parse("(= (: $t Type) (transform (: $w $t) True))")
DEFAULT_EQUALITIES = (INHABITED_RULE,)


def error_value(call: Expression, reason: Expression = BAD_TYPE) -> Expr:
    return Expr((ERROR, call, reason))


def _short(e: Expression) -> str:
    return format_expr(e, limit=200)


# Python frames per unit of fuel, with room for deep terms in unify/substitute
_FRAMES_PER_FUEL = 4
_STACK_BYTES = 512 * 1024 * 1024


def _deep(fuel: int, fn: Callable[[], list[Expression]]) -> list[Expression]:
    """Run ``fn`` with enough stack that ``fuel`` nested calls cannot overflow it."""
    need = _FRAMES_PER_FUEL * fuel + 10_000
    if need <= sys.getrecursionlimit():
        return fn()
    box: dict[str, object] = {}

    def work() -> None:
        try:
            box["value"] = fn()
        except BaseException as exc:  # re-raised in the caller's thread
            box["error"] = exc

    old_limit, old_size = sys.getrecursionlimit(), threading.stack_size()
    sys.setrecursionlimit(need)
    threading.stack_size(_STACK_BYTES)
    try:
        t = threading.Thread(target=work, name="mettagraph-eval")
        t.start()
    finally:
        threading.stack_size(old_size)
    t.join()
    sys.setrecursionlimit(old_limit)
    if "error" in box:
        raise box["error"]  # type: ignore[misc]
    return box["value"]  # type: ignore[return-value]


def _dedup(items: Iterable[Expression]) -> list[Expression]:
    seen = set()
    out = []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


# -- grounded functions -------------------------------------------------------

GroundedImpl = Callable[["Interpreter", Sequence[Expression]], Iterable[Expression]]


@dataclass(frozen=True)
class GroundedFunction:
    """A host-language function callable from expressions.

    ``quoting`` functions receive their arguments unevaluated.  ``kind`` is
    the trace event kind recorded for a call.
    """

    name: str
    fn: GroundedImpl
    quoting: bool = False
    kind: str = "grounded-apply"


class GroundingRegistry:
    def __init__(self, functions: Iterable[GroundedFunction] = ()) -> None:
        self._fns: dict[str, GroundedFunction] = {}
        for f in functions:
            self.register(f)

    def register(self, f: GroundedFunction) -> None:
        self._fns[f.name] = f

    def get(self, name: str) -> GroundedFunction | None:
        return self._fns.get(name)

    def __contains__(self, name: object) -> bool:
        return name in self._fns

    def names(self) -> frozenset[str]:
        return frozenset(self._fns)


def _number(e: Expression) -> int | float:
    if is_literal(e):
        v = literal_value(e)  # type: ignore[arg-type]
        if not isinstance(v, str):
            return v
    raise TypeError(f"expected a number, got {_short(e)}")


def _string(e: Expression) -> str:
    if is_literal(e):
        v = literal_value(e)  # type: ignore[arg-type]
        if isinstance(v, str):
            return v
    raise TypeError(f"expected a string, got {_short(e)}")


def _arith(op: Callable) -> GroundedImpl:
    def run(_interp, args):
        if len(args) != 2:
            raise TypeError("arithmetic takes two arguments")
        return [make_literal(op(_number(args[0]), _number(args[1])))]

    return run


def _divide(a, b):
    if isinstance(a, int) and isinstance(b, int) and b != 0 and a % b == 0:
        return a // b
    return a / b


def _compare(op: Callable) -> GroundedImpl:
    def run(_interp, args):
        if len(args) != 2:
            raise TypeError("comparison takes two arguments")
        return [make_literal(bool(op(_number(args[0]), _number(args[1]))))]

    return run


def _structural_eq(_interp, args):
    if len(args) != 2:
        raise TypeError("== takes two arguments")
    return [make_literal(args[0] == args[1])]


def _concat(_interp, args):
    return [make_literal("".join(_string(a) for a in args))]


def _string_length(_interp, args):
    if len(args) != 1:
        raise TypeError("string-length takes one argument")
    return [make_literal(len(_string(args[0])))]


def _quote(_interp, args):
    if len(args) != 1:
        raise TypeError("quote takes one argument")
    return [args[0]]


def _query_space(interp: "Interpreter", arg: Expression | None) -> Metagraph:
    """``&self`` (or no argument) is the interpreter's space; ``(? e1 e2 ...)``
    is a scratch space holding just the listed expressions."""
    if arg is None or arg == SELF:
        return interp.space
    if isinstance(arg, Expr) and len(arg) >= 1 and arg[0] == LISTED:
        return Metagraph.from_expressions(arg.children[1:])
    raise TypeError(f"not a space: {arg}")


def _match(interp, args):
    if len(args) not in (1, 2):
        raise TypeError("(match P [space])")
    space = _query_space(interp, args[1] if len(args) == 2 else None)
    return [space.lift(m.matched_root) for m in match(space, args[0])]


def _transform(interp, args):
    if len(args) not in (2, 3):
        raise TypeError("(transform P T [space])")
    space = _query_space(interp, args[2] if len(args) == 3 else None)
    return transform(space, args[0], args[1])


def _match_ev(interp, args):
    if len(args) not in (2, 3):
        raise TypeError("(matchEV P threshold [space])")
    pattern = args[0]
    if not isinstance(pattern, Enriched):
        raise TypeError("matchEV needs an enriched pattern")
    space = _query_space(interp, args[2] if len(args) == 3 else None)
    hits = match_enriched(space, pattern, pattern.kind, float(_number(args[1])), interp.enrichments)
    return [space.lift(m.matched_root) for m in hits]


def core_registry() -> GroundingRegistry:
    arith = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": _divide, "%": operator.mod}
    comps = {"<": operator.lt, ">": operator.gt, "<=": operator.le, ">=": operator.ge}
    fns = [GroundedFunction(k, _arith(v)) for k, v in arith.items()]
    fns += [GroundedFunction(k, _compare(v)) for k, v in comps.items()]
    fns += [
        GroundedFunction("==", _structural_eq),
        GroundedFunction("concat", _concat),
        GroundedFunction("string-length", _string_length),
        GroundedFunction("quote", _quote, quoting=True),
        GroundedFunction("match", _match, quoting=True, kind="match"),
        GroundedFunction("transform", _transform, quoting=True, kind="transform"),
        GroundedFunction("matchEV", _match_ev, quoting=True, kind="match"),
    ]
    return GroundingRegistry(fns)


# -- the evaluator -------------------------------------------------------------


class TaskStatus(enum.Enum):
    PENDING = "pending"
    IN_PROGRESS = "in-progress"
    DONE = "done"


@dataclass
class EvalTask:
    """A scheduled evaluation of one activated root."""

    target: int
    fuel: int
    status: TaskStatus = TaskStatus.PENDING
    results: tuple[Expression, ...] = field(default=())


class _Run:
    """State of one top-level evaluation: fuel, renaming counter, equalities."""

    def __init__(self, interp: "Interpreter", fuel: int, tracer: Tracer | None) -> None:
        self.fuel = fuel
        self.tracer = tracer
        self.fresh = 0
        self.by_head: dict[object, list[tuple[int, Expr]]] = {}
        self.wild: list[tuple[int, Expr]] = []
        eqs = interp.equalities()
        for order, eq in enumerate(eqs):
            lhs = eq[1]
            head = lhs[0] if isinstance(lhs, Expr) and len(lhs) else lhs
            if isinstance(head, (Variable, Enriched)) or (isinstance(head, Expr)):
                self.wild.append((order, eq))
            else:
                self.by_head.setdefault(head, []).append((order, eq))

    def tick(self, e: Expression) -> None:
        if self.fuel <= 0:
            raise FuelExhausted(f"fuel exhausted while evaluating {_short(e)}", e)
        self.fuel -= 1

    def candidates(self, e: Expression) -> list[Expr]:
        head = e[0] if isinstance(e, Expr) and len(e) else e
        if isinstance(head, Variable) or isinstance(head, Expr):
            pool = [x for xs in self.by_head.values() for x in xs] + self.wild
        else:
            pool = self.by_head.get(head, []) + self.wild
        return [eq for _, eq in sorted(pool, key=lambda p: p[0])]

    def rename_apart(self, eq: Expr, avoid: set[str]) -> Expr:
        clash = variables(eq) & avoid
        if not clash:
            return eq
        self.fresh += 1
        ren = {n: Variable(f"{n}#{self.fresh}") for n in sorted(clash)}
        return substitute(eq, ren)  # type: ignore[return-value]


class Interpreter:
    """Evaluates expressions against ``space``.

    With ``install_defaults`` the default equalities (currently the
    inhabited-type rule) are added to the space as roots.  They are consulted
    during evaluation either way.
    """

    def __init__(
        self,
        space: Metagraph | None = None,
        registry: GroundingRegistry | None = None,
        enrichments: EnrichmentRegistry | None = None,
        fuel: int = DEFAULT_FUEL,
        install_defaults: bool = True,
    ) -> None:
        self.space = space if space is not None else Metagraph()
        self.registry = registry or core_registry()
        self.enrichments = enrichments or default_registry()
        self.fuel = fuel
        if install_defaults:
            for eq in DEFAULT_EQUALITIES:
                self.space.add_expression(eq)

    # parsing helpers use the registry's names as grounded symbols
    def parse(self, text: str) -> Expression:
        return parse(text, self.registry.names())

    def load(self, text: str) -> list[int]:
        """Add every expression in ``text`` to the space as a root."""
        return [self.space.add_expression(e) for e in parse_all(text, self.registry.names())]

    def equalities(self) -> list[Expr]:
        """Equality roots of the space in root order, then missing defaults."""
        out = []
        for r in self.space.roots:
            e = self.space.lift(r)
            if isinstance(e, Expr) and len(e) == 3 and e[0] == EQUALS:
                out.append(e)
        present = set(out)
        out.extend(eq for eq in DEFAULT_EQUALITIES if eq not in present)
        return out

    # -- public entry points --------------------------------------------------

    def eval(self, e: Expression | str, fuel: int | None = None) -> list[Expression]:
        if isinstance(e, str):
            e = self.parse(e)
        run = _Run(self, self.fuel if fuel is None else fuel, None)
        return _deep(run.fuel, lambda: self._eval(e, run))

    def eval_traced(self, e: Expression | str, fuel: int | None = None) -> tuple[list[Expression], Trace]:
        """Evaluate and return the results with the execution trace.

        If fuel runs out, the partial trace is attached to the exception as
        ``trace``.
        """
        if isinstance(e, str):
            e = self.parse(e)
        tracer = Tracer()
        run = _Run(self, self.fuel if fuel is None else fuel, tracer)
        top = tracer.record("dispatch", e)
        try:
            results = _deep(run.fuel, lambda: self._eval(e, run))
        except EvaluationError as exc:
            exc.trace = tracer.build()  # type: ignore[attr-defined]
            raise
        top.outputs = list(results)
        return results, tracer.build()

    def run_with_trace(
        self, e: Expression | str, fuel: int | None = None
    ) -> tuple[list[Expression], list, Metagraph]:
        """Results, trace events and the trace space of one evaluation."""
        results, trace = self.eval_traced(e, fuel)
        return results, trace.events, trace.space

    def submit(self, edge_id: int, fuel: int | None = None) -> EvalTask:
        self.space.get_edge(edge_id)
        return EvalTask(edge_id, self.fuel if fuel is None else fuel)

    def run_task(self, task: EvalTask) -> EvalTask:
        if task.status is TaskStatus.DONE:
            return task
        task.status = TaskStatus.IN_PROGRESS
        task.results = tuple(self.activate(task.target, task.fuel))
        task.status = TaskStatus.DONE
        return task

    def equality_query(self, e: Expression | str) -> list[tuple[Bindings, Expression]]:
        """Bindings and instantiated right-hand side of each equality applying to ``e``."""
        if isinstance(e, str):
            e = self.parse(e)
        run = _Run(self, 0, None)
        return [(b, rhs) for b, rhs, _ in self._equality_steps(e, run)]

    def check_inhabited(self, t: Expression | str, fuel: int | None = None) -> bool:
        if isinstance(t, str):
            t = self.parse(t)
        return TRUE in self.eval(Expr((Symbol(":"), t, Symbol("Type"))), fuel)

    def activate(self, edge_id: int, fuel: int | None = None) -> list[Expression]:
        e = self.space.lift(edge_id)
        if not (isinstance(e, Expr) and len(e) == 2 and e[0] == ACTIVATE):
            raise NotActivatedError(f"edge {edge_id} is not an activated expression", e)
        return self.eval(e[1], fuel)

    def activated_roots(self) -> list[int]:
        out = []
        for r in self.space.roots:
            e = self.space.lift(r)
            if isinstance(e, Expr) and len(e) == 2 and e[0] == ACTIVATE:
                out.append(r)
        return out

    # -- core -----------------------------------------------------------------

    def _equality_steps(self, e: Expression, run: _Run) -> list[tuple[Bindings, Expression, Expr]]:
        avoid = variables(e)
        out = []
        for eq in run.candidates(e):
            eq = run.rename_apart(eq, avoid)
            b = unify(eq[1], e)
            if b is not None:
                out.append((b, substitute(eq[2], b), eq))
        return out

    def _eval(self, e: Expression, run: _Run) -> list[Expression]:
        run.tick(e)
        if isinstance(e, Variable):
            return [e]
        if isinstance(e, Expr) and len(e) == 2 and e[0] == ACTIVATE:
            return self._eval(e[1], run)
        if isinstance(e, Expr) and len(e) and isinstance(e[0], Grounded) and not is_literal(e[0]):
            return self._apply_grounded(e, run)
        if isinstance(e, Expr) and len(e) >= 2:
            bad = self._type_check(e, run)
            if bad is not None:
                return [bad]

        steps = self._equality_steps(e, run)
        if steps:
            out: list[Expression] = []
            for b, rhs, eq in steps:
                if run.tracer is not None:
                    run.tracer.record("equality-step", e, [rhs], rule=eq, bindings=b)
                out.extend(self._eval(rhs, run))
            return _dedup(out)

        if isinstance(e, Expr) and len(e):
            options = [self._eval(c, run) for c in e.children]
            out = []
            for combo in itertools.product(*options):
                new = Expr(tuple(combo))
                out.extend([e] if new == e else self._eval(new, run))
            return _dedup(out)
        return [e]

    def _type_check(self, call: Expr, run: _Run) -> Expression | None:
        """Error value for an ill-typed call, else None."""
        ts = type_system(self.space)
        if not any(is_arrow(t) for t in ts.types_of(call[0])):
            return None
        res = ts.check_call(call[0], call.children[1:])
        bad = res.outcome is Outcome.ERROR
        if run.tracer is not None:
            out = [error_value(call)] if bad else ([res.type] if res.type is not None else [])
            run.tracer.record("type-check", call, out)
        return error_value(call) if bad else None

    def _apply_grounded(self, e: Expr, run: _Run) -> list[Expression]:
        head = e[0]
        assert isinstance(head, Grounded)
        f = self.registry.get(head.name)
        if f is None:
            raise UnknownGroundedError(f"no grounded function named {head.name}", e)
        args = e.children[1:]
        options = [[a] for a in args] if f.quoting else [self._eval(a, run) for a in args]
        out: list[Expression] = []
        for combo in itertools.product(*options):
            call = Expr((head,) + tuple(combo))
            bad = self._type_check(call, run)
            if bad is not None:
                out.append(bad)
                continue
            try:
                res = list(f.fn(self, tuple(combo)))
            except EvaluationError:
                raise
            except Exception as exc:  # the host function failed
                raise GroundedFault(f"{head.name} failed on {_short(call)}: {exc}", call) from exc
            if run.tracer is not None:
                run.tracer.record(f.kind, call, res)
            out.extend(res)
        return _dedup(out)


# -- functional interface --------------------------------------------------------


def evaluate(space: Metagraph, e: Expression, fuel: int = DEFAULT_FUEL) -> list[Expression]:
    """Evaluate without installing anything into ``space``."""
    return Interpreter(space, install_defaults=False).eval(e, fuel)


def equality_query(space: Metagraph, e: Expression) -> list[tuple[Bindings, Expression]]:
    return Interpreter(space, install_defaults=False).equality_query(e)


def check_inhabited(space: Metagraph, t: Expression, fuel: int = DEFAULT_FUEL) -> bool:
    return Interpreter(space, install_defaults=False).check_inhabited(t, fuel)


def activate(space: Metagraph, edge_id: int, fuel: int = DEFAULT_FUEL) -> list[Expression]:
    return Interpreter(space, install_defaults=False).activate(edge_id, fuel)


def run_with_trace(space: Metagraph, e: Expression, fuel: int = DEFAULT_FUEL):
    return Interpreter(space, install_defaults=False).run_with_trace(e, fuel)
