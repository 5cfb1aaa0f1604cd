"""Execution traces: recording, metagraph encoding, JSON export and replay.

Each recorded step becomes a root ``(step <n> <kind> <input> (<outputs>...))``
of a trace space, so traces can be matched and rewritten like any other
content.  Equality steps also store the equality they used as a root.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .matcher import Bindings, HomomorphismMap, structural_map, substitute
from .metagraph import Metagraph
from .rewrite import SPORule, apply_spo
from .syntax import Expr, Expression, Grounded, Symbol, Variable, format_expr

__all__ = [
    "KINDS",
    "TraceEvent",
    "Trace",
    "Tracer",
    "equality_rule",
    "replay_event",
    "replay_trace",
]

KINDS = ("dispatch", "grounded-apply", "match", "transform", "equality-step", "type-check")
STEP = Symbol("step")


@dataclass(frozen=True)
class TraceEvent:
    step: int
    kind: str
    input: int
    rule: int | None
    bindings: Bindings
    outputs: tuple[int, ...]


@dataclass
class _Pending:
    kind: str
    input: Expression
    rule: Expression | None
    bindings: Bindings
    outputs: list[Expression] = field(default_factory=list)


class Tracer:
    """Collects steps during one evaluation."""

    def __init__(self) -> None:
        self._steps: list[_Pending] = []

    def record(
        self,
        kind: str,
        input: Expression,
        outputs: Iterable[Expression] = (),
        rule: Expression | None = None,
        bindings: Bindings | None = None,
    ) -> _Pending:
        if kind not in KINDS:
            raise ValueError(f"unknown trace event kind {kind!r}")
        p = _Pending(kind, input, rule, bindings or Bindings(), list(outputs))
        self._steps.append(p)
        return p

    def __len__(self) -> int:
        return len(self._steps)

    def build(self) -> "Trace":
        space = Metagraph()
        events = []
        for n, p in enumerate(self._steps):
            outs = tuple(p.outputs)
            space.add_expression(Expr((STEP, Grounded(str(n)), Symbol(p.kind), p.input, Expr(outs))))
            rule_id = space.add_expression(p.rule) if p.rule is not None else None
            events.append(
                TraceEvent(
                    step=n,
                    kind=p.kind,
                    input=space.find(p.input),
                    rule=rule_id,
                    bindings=p.bindings,
                    outputs=tuple(space.find(o) for o in outs),
                )
            )
        return Trace(events, space)


@dataclass
class Trace:
    events: list[TraceEvent]
    space: Metagraph

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def of_kind(self, kind: str) -> list[TraceEvent]:
        return [e for e in self.events if e.kind == kind]

    def expression(self, edge_id: int) -> Expression:
        return self.space.lift(edge_id)

    def to_json_lines(self) -> str:
        """One JSON object per event; expressions as S-expression text."""
        lines = []
        for ev in self.events:
            text = lambda i: format_expr(self.space.lift(i))  # noqa: E731
            lines.append(
                json.dumps(
                    {
                        "step": ev.step,
                        "kind": ev.kind,
                        "input": text(ev.input),
                        "rule": None if ev.rule is None else text(ev.rule),
                        "bindings": {"$" + k: format_expr(v) for k, v in ev.bindings.items()},
                        "outputs": [text(o) for o in ev.outputs],
                    },
                    ensure_ascii=False,
                )
            )
        return "".join(line + "\n" for line in lines)


# -- replay through the rewrite engine ----------------------------------------


def equality_rule(lhs: Expression, rhs: Expression) -> tuple[SPORule, int, int]:
    """The SPO rule for one equality step: delete the matched left-hand root,
    keep all of its sub-edges, and create the right-hand side over them.

    Returns the rule with the ids of the left and right roots.
    """
    L = Metagraph()
    lroot = L.add_expression(lhs)
    R = Metagraph()
    rroot = R.add_expression(rhs)
    keep = {}
    for lid in L.ids():
        # a bare-variable left side is kept: the step wraps the whole input
        if lid != lroot or isinstance(lhs, Variable):
            keep[lid] = R.intern(L.lift(lid))
    return SPORule(L, R, keep, name=format_expr(lhs)), lroot, rroot


def replay_event(event: TraceEvent, trace_space: Metagraph) -> list[Expression]:
    """Re-derive the outputs of an equality step with :func:`apply_spo`."""
    if event.kind != "equality-step" or event.rule is None:
        raise ValueError("only equality steps can be replayed as rewrites")
    eq = trace_space.lift(event.rule)
    assert isinstance(eq, Expr) and len(eq) == 3
    rule, lroot, rroot = equality_rule(eq[1], eq[2])
    host = Metagraph()
    hroot = host.add_expression(substitute(trace_space.lift(event.input), event.bindings))
    m = structural_map(rule.L, lroot, host, hroot)
    d = apply_spo(host, rule, HomomorphismMap(m))
    return [d.result.lift(d.mu[rroot])]


def replay_trace(trace: Trace) -> list[tuple[TraceEvent, bool]]:
    """Replay every equality step; pair each with whether it reproduced its outputs."""
    out = []
    for ev in trace.of_kind("equality-step"):
        want: Sequence[Expression] = [trace.space.lift(o) for o in ev.outputs]
        got = replay_event(ev, trace.space)
        out.append((ev, list(got) == list(want)))
    return out
