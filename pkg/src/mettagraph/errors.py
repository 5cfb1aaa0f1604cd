"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "MettaGraphError",
    "ParseError",
    "UnknownEdgeError",
    "ReferencedEdgeError",
    "CyclicExpressionError",
    "DuplicateKindError",
    "UnknownKindError",
    "NoMetricError",
    "TemplateVariableError",
    "InvalidMatchError",
    "RuleError",
    "EvaluationError",
    "FuelExhausted",
    "GroundedFault",
    "UnknownGroundedError",
    "NotActivatedError",
]


class MettaGraphError(Exception):
    """Base class for all package errors."""


class ParseError(MettaGraphError, ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownEdgeError(MettaGraphError, KeyError):
    def __str__(self) -> str:
        return f"unknown edge id {self.args[0]!r}"


class ReferencedEdgeError(MettaGraphError):
    """Raised when a forbid-if-referenced removal hits an edge that still has referrers."""

    def __init__(self, edge_id: int, referrers: frozenset[int]):
        super().__init__(f"edge {edge_id} is referenced by {sorted(referrers)}")
        self.edge_id = edge_id
        self.referrers = referrers


class CyclicExpressionError(MettaGraphError):
    pass


class DuplicateKindError(MettaGraphError):
    pass


class UnknownKindError(MettaGraphError, KeyError):
    def __str__(self) -> str:
        return f"unknown enrichment kind {self.args[0]!r}"


class NoMetricError(MettaGraphError):
    pass


class TemplateVariableError(MettaGraphError):
    pass


class InvalidMatchError(MettaGraphError):
    pass


class RuleError(MettaGraphError, ValueError):
    pass


class EvaluationError(MettaGraphError):
    """An evaluation failure that names the offending expression."""

    def __init__(self, message: str, expr=None):
        super().__init__(message)
        self.expr = expr


class FuelExhausted(EvaluationError):
    pass


class GroundedFault(EvaluationError):
    pass


class UnknownGroundedError(EvaluationError):
    pass


class NotActivatedError(EvaluationError):
    pass
