"""Enrichment kinds: payload homomorphisms and proximity metrics.

A kind carries a finite, named set of witness maps.  ``hom_check(s, s')``
holds when some witness sends ``s`` to ``s'``; the identity witness ``"id"``
is always present.  Vector payloads are little-endian float64 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import DuplicateKindError, NoMetricError, UnknownKindError

__all__ = [
    "IDENTITY",
    "EnrichmentKind",
    "EnrichmentRegistry",
    "identity_bytes_kind",
    "vector_kind",
    "linear_map_kind",
    "encode_vector",
    "decode_vector",
    "cosine_proximity",
    "default_registry",
]

IDENTITY = "id"

Payload = bytes
Witness = Callable[[Payload], Payload]


def encode_vector(values: Iterable[float]) -> bytes:
    return np.asarray(list(values), dtype="<f8").tobytes()


def decode_vector(payload: bytes) -> np.ndarray:
    return np.frombuffer(payload, dtype="<f8")


def cosine_proximity(a: bytes, b: bytes) -> float:
    """Cosine similarity rescaled to [0, 1] via (cos + 1) / 2."""
    if a == b:
        return 1.0
    x, y = decode_vector(a), decode_vector(b)
    if x.shape != y.shape:
        return 0.0
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        return 0.5
    cos = float(np.dot(x, y) / (nx * ny))
    return min(1.0, max(0.0, (cos + 1.0) / 2.0))


def _bytes_equal(a: bytes, b: bytes) -> bool:
    return a == b


def _vectors_close(a: bytes, b: bytes) -> bool:
    x, y = decode_vector(a), decode_vector(b)
    return x.shape == y.shape and bool(np.allclose(x, y, rtol=1e-12, atol=1e-12))


@dataclass(frozen=True)
class EnrichmentKind:
    name: str
    witnesses: Mapping[str, Witness] = field(default_factory=dict)
    proximity: Callable[[Payload, Payload], float] | None = None
    equal: Callable[[Payload, Payload], bool] = _bytes_equal

    def witness_names(self) -> list[str]:
        return [IDENTITY] + [w for w in self.witnesses if w != IDENTITY]

    def maps(self, witness: str, s: Payload, s2: Payload) -> bool:
        """Does the named witness send ``s`` to ``s2``?"""
        if witness == IDENTITY:
            return self.equal(s, s2)
        try:
            image = self.witnesses[witness](s)
        except (ValueError, TypeError):
            return False
        return self.equal(image, s2)

    def hom_check(self, s: Payload, s2: Payload) -> bool:
        return any(self.maps(w, s, s2) for w in self.witness_names())


def identity_bytes_kind(name: str = "identity-bytes") -> EnrichmentKind:
    return EnrichmentKind(name)


def vector_kind(name: str = "vector-f64") -> EnrichmentKind:
    return EnrichmentKind(name, proximity=cosine_proximity, equal=_vectors_close)


def linear_map_kind(name: str, matrices: Mapping[str, np.ndarray]) -> EnrichmentKind:
    """A vector kind whose witnesses are the given linear maps."""

    def apply(m: np.ndarray) -> Witness:
        m = np.asarray(m, dtype=float)

        def witness(payload: bytes) -> bytes:
            v = decode_vector(payload)
            if m.shape[1] != v.shape[0]:
                raise ValueError("dimension mismatch")
            return encode_vector(m @ v)

        return witness

    return EnrichmentKind(
        name,
        witnesses={k: apply(m) for k, m in matrices.items()},
        proximity=cosine_proximity,
        equal=_vectors_close,
    )


class EnrichmentRegistry:
    """Name -> kind table.  Unregistered kinds fall back to byte identity."""

    def __init__(self, kinds: Iterable[EnrichmentKind] = ()) -> None:
        self._kinds: dict[str, EnrichmentKind] = {}
        for k in kinds:
            self.register_kind(k)

    def register_kind(self, kind: EnrichmentKind) -> None:
        if kind.name in self._kinds:
            raise DuplicateKindError(f"enrichment kind {kind.name!r} already registered")
        self._kinds[kind.name] = kind

    def __contains__(self, name: object) -> bool:
        return name in self._kinds

    def get(self, name: str) -> EnrichmentKind:
        try:
            return self._kinds[name]
        except KeyError:
            raise UnknownKindError(name) from None

    def resolve(self, name: str) -> EnrichmentKind:
        """Like :meth:`get`, but unknown kinds act as byte identity."""
        return self._kinds.get(name) or identity_bytes_kind(name)

    def hom_check(self, kind: str, s: Payload, s2: Payload) -> bool:
        return self.get(kind).hom_check(s, s2)

    def proximity(self, kind: str, a: Payload, b: Payload) -> float:
        k = self.get(kind)
        if k.proximity is None:
            raise NoMetricError(f"enrichment kind {kind!r} has no proximity metric")
        return k.proximity(a, b)


def default_registry() -> EnrichmentRegistry:
    return EnrichmentRegistry([identity_bytes_kind(), vector_kind()])
