"""Hash-consed directed labeled metagraph store.

Every node is an :class:`Edge`.  A vertex is an edge with no targets.  A list
expression ``(a b c)`` is stored as an edge labeled :data:`EXPR_LABEL` whose
ordered targets are the edges of ``a``, ``b`` and ``c``.  Structurally equal
edges (same label, same target id sequence, same enrichment) are stored once.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Literal, Mapping

from .errors import CyclicExpressionError, ReferencedEdgeError, UnknownEdgeError
from .syntax import (
    CORE_GROUNDED,
    Enriched,
    Expr,
    Expression,
    Label,
    Symbol,
    format_expr,
    parse_all,
)

__all__ = ["EXPR_LABEL", "TYPE_OF", "Enrichment", "Edge", "Metagraph"]

#: Label carried by every list edge.  ``()`` can never be read as a symbol.
EXPR_LABEL = Symbol("()")
TYPE_OF = Symbol(":")

RemovalPolicy = Literal["cascade", "forbid"]


@dataclass(frozen=True)
class Enrichment:
    kind: str
    payload: bytes


@dataclass(frozen=True)
class Edge:
    id: int
    label: Label
    targets: tuple[int, ...] = ()
    enrichment: Enrichment | None = None

    @property
    def is_vertex(self) -> bool:
        return not self.targets

    @property
    def key(self) -> tuple:
        return (self.label, self.targets, self.enrichment)


class Metagraph:
    """A deduplicated edge store with label and incidence indices.

    Edge ids are integers handed out in insertion order and never reused by
    the same store.  ``roots`` marks the top-level expressions of the space.
    """

    def __init__(self) -> None:
        self._edges: dict[int, Edge] = {}
        self._struct: dict[tuple, int] = {}
        self._by_label: dict[Label, set[int]] = defaultdict(set)
        self._incidence: dict[int, set[int]] = {}
        self._roots: set[int] = set()
        self._next_id = 0
        #: bumped whenever a ``(: ...)`` root may have appeared or disappeared
        self.type_epoch = 0
        self._cache: dict[str, object] = {}

    # -- queries ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._edges)

    def __contains__(self, edge_id: object) -> bool:
        return edge_id in self._edges

    def __iter__(self) -> Iterator[Edge]:
        for i in sorted(self._edges):
            yield self._edges[i]

    def ids(self) -> list[int]:
        return sorted(self._edges)

    @property
    def roots(self) -> list[int]:
        return sorted(self._roots)

    def is_root(self, edge_id: int) -> bool:
        return edge_id in self._roots

    def get_edge(self, edge_id: int) -> Edge:
        try:
            return self._edges[edge_id]
        except KeyError:
            raise UnknownEdgeError(edge_id) from None

    edge = get_edge

    def incident(self, edge_id: int) -> frozenset[int]:
        """Edges listing ``edge_id`` among their targets."""
        self.get_edge(edge_id)
        return frozenset(self._incidence[edge_id])

    def with_label(self, label: Label) -> frozenset[int]:
        return frozenset(self._by_label.get(label, ()))

    def label_count(self, label: Label) -> int:
        return len(self._by_label.get(label, ()))

    def lookup(self, label: Label, targets: Iterable[int] = (), enrichment: Enrichment | None = None) -> int | None:
        return self._struct.get((label, tuple(targets), enrichment))

    def find(self, e: Expression) -> int | None:
        """Id of the edge storing ``e``, or None; never inserts."""
        return self._find(e, {})

    def _find(self, e: Expression, memo: dict[int, int | None]) -> int | None:
        if id(e) in memo:
            return memo[id(e)]
        x = e
        enrichment = None
        if isinstance(x, Enriched):
            enrichment = Enrichment(x.kind, x.payload)
            x = x.inner
        found: int | None = None
        if isinstance(x, Expr):
            ids = []
            for c in x.children:
                i = self._find(c, memo)
                if i is None:
                    break
                ids.append(i)
            else:
                found = self.lookup(EXPR_LABEL, ids, enrichment)
        elif not isinstance(x, Enriched):
            found = self.lookup(x, (), enrichment)
        memo[id(e)] = found
        return found

    def lift(self, edge_id: int) -> Expression:
        """Rebuild the expression tree rooted at ``edge_id``."""
        memo: dict[int, Expression] = {}
        return self._lift(edge_id, memo, set())

    def _lift(self, i: int, memo: dict[int, Expression], active: set[int]) -> Expression:
        if i in memo:
            return memo[i]
        if i in active:
            raise CyclicExpressionError(f"edge {i} lies on a cycle")
        e = self.get_edge(i)
        active.add(i)
        if e.label == EXPR_LABEL:
            out: Expression = Expr(tuple(self._lift(t, memo, active) for t in e.targets))
        elif e.targets:
            # A labeled hyperedge that is not a list: lift as (label targets...).
            out = Expr((e.label,) + tuple(self._lift(t, memo, active) for t in e.targets))
        else:
            out = e.label
        if e.enrichment is not None:
            out = Enriched(out, e.enrichment.kind, e.enrichment.payload)
        active.discard(i)
        memo[i] = out
        return out

    def root_expressions(self) -> list[Expression]:
        return [self.lift(r) for r in self.roots]

    # -- mutation -----------------------------------------------------------

    def add_edge(
        self,
        label: Label,
        targets: Iterable[int] = (),
        enrichment: Enrichment | None = None,
    ) -> int:
        """Insert an edge (or return the existing structurally equal one)."""
        targets = tuple(targets)
        key = (label, targets, enrichment)
        found = self._struct.get(key)
        if found is not None:
            return found
        for t in targets:
            if t not in self._edges:
                raise UnknownEdgeError(t)
        i = self._next_id
        self._next_id += 1
        self._install(Edge(i, label, targets, enrichment))
        return i

    def _install(self, e: Edge) -> None:
        self._edges[e.id] = e
        self._struct[e.key] = e.id
        self._by_label[e.label].add(e.id)
        self._incidence.setdefault(e.id, set())
        for t in e.targets:
            self._incidence.setdefault(t, set()).add(e.id)

    def intern(self, e: Expression) -> int:
        """Hash-cons ``e`` bottom-up without marking it as a root."""
        return self._intern(e, {})

    def _intern(self, e: Expression, memo: dict[int, int]) -> int:
        done = memo.get(id(e))
        if done is not None:
            return done
        x = e
        enrichment = None
        if isinstance(x, Enriched):
            enrichment = Enrichment(x.kind, x.payload)
            x = x.inner
            if isinstance(x, Enriched):
                raise ValueError("an edge carries at most one enrichment")
        if isinstance(x, Expr):
            i = self.add_edge(EXPR_LABEL, [self._intern(c, memo) for c in x.children], enrichment)
        else:
            i = self.add_edge(x, (), enrichment)
        memo[id(e)] = i
        return i

    def add_expression(self, e: Expression) -> int:
        """Add ``e`` as a top-level expression and return its root id."""
        i = self.intern(e)
        self.mark_root(i)
        return i

    def mark_root(self, edge_id: int) -> None:
        self.get_edge(edge_id)
        if edge_id not in self._roots:
            self._roots.add(edge_id)
            if self._is_type_fact(edge_id):
                self.type_epoch += 1

    def _is_type_fact(self, edge_id: int) -> bool:
        e = self._edges[edge_id]
        return (
            e.label == EXPR_LABEL
            and len(e.targets) == 3
            and self._edges[e.targets[0]].label == TYPE_OF
            and not self._edges[e.targets[0]].targets
        )

    def remove_edge(self, edge_id: int, policy: RemovalPolicy = "cascade") -> set[int]:
        """Remove an edge.

        ``cascade`` also removes, transitively, every edge that targets a
        removed edge.  ``forbid`` raises :class:`ReferencedEdgeError` unless
        nothing targets ``edge_id``.
        """
        self.get_edge(edge_id)
        if policy == "forbid":
            refs = self._incidence[edge_id] - {edge_id}
            if refs:
                raise ReferencedEdgeError(edge_id, frozenset(refs))
            doomed = {edge_id}
        elif policy == "cascade":
            doomed = set()
            stack = [edge_id]
            while stack:
                i = stack.pop()
                if i in doomed:
                    continue
                doomed.add(i)
                stack.extend(self._incidence[i] - doomed)
        else:
            raise ValueError(f"unknown removal policy {policy!r}")
        for i in doomed:
            e = self._edges.pop(i)
            del self._struct[e.key]
            labelled = self._by_label[e.label]
            labelled.discard(i)
            if not labelled:
                del self._by_label[e.label]
            for t in e.targets:
                if t in self._incidence:
                    self._incidence[t].discard(i)
            self._roots.discard(i)
        for i in doomed:
            self._incidence.pop(i, None)
        self.type_epoch += 1
        return doomed

    def copy(self) -> "Metagraph":
        g = Metagraph()
        for e in self._edges.values():
            g._install(e)
        g._roots = set(self._roots)
        g._next_id = self._next_id
        return g

    # -- construction from raw edge tables -----------------------------------

    @classmethod
    def quotient(
        cls,
        edges: Mapping[int, tuple[Label, Iterable[int], Enrichment | None]],
        roots: Iterable[int] = (),
    ) -> tuple["Metagraph", dict[int, int]]:
        """Build a store from a raw (possibly non-deduplicated) edge table.

        Structurally equal edges are merged up to congruence, then ids are
        reassigned so that targets precede their referrers wherever the
        graph is acyclic.  An edge keeps its old id when that order already
        holds.  Returns the store and the old-id -> new-id map.
        """
        table = {i: (lab, tuple(ts), enr) for i, (lab, ts, enr) in edges.items()}
        for i, (_, ts, _) in table.items():
            for t in ts:
                if t not in table:
                    raise UnknownEdgeError(t)
        parent = {i: i for i in table}

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        changed = True
        while changed:
            changed = False
            seen: dict[tuple, int] = {}
            for i in sorted(table):
                if find(i) != i:
                    continue
                lab, ts, enr = table[i]
                key = (lab, tuple(find(t) for t in ts), enr)
                other = seen.get(key)
                if other is None:
                    seen[key] = i
                else:
                    lo, hi = min(i, other), max(i, other)
                    parent[hi] = lo
                    seen[key] = lo
                    changed = True

        reps = sorted(i for i in table if find(i) == i)
        children = {i: {find(t) for t in table[i][1]} - {i} for i in reps}
        waiting = {i: len(children[i]) for i in reps}
        users: dict[int, set[int]] = defaultdict(set)
        for i in reps:
            for t in children[i]:
                users[t].add(i)
        ready = [i for i in reps if waiting[i] == 0]
        heapq.heapify(ready)
        placed: set[int] = set()
        order: list[int] = []
        pending = set(reps)
        while pending:
            if not ready:
                # cycle: force the smallest remaining id
                heapq.heappush(ready, min(pending))
            i = heapq.heappop(ready)
            if i in placed:
                continue
            placed.add(i)
            pending.discard(i)
            order.append(i)
            for u in users[i]:
                waiting[u] -= 1
                if waiting[u] == 0 and u not in placed:
                    heapq.heappush(ready, u)

        newid: dict[int, int] = {}
        prev = -1
        for i in order:
            n = max(i, prev + 1)
            newid[i] = n
            prev = n
        idmap = {i: newid[find(i)] for i in table}

        g = cls()
        for i in order:
            lab, ts, enr = table[i]
            g._install(Edge(newid[i], lab, tuple(idmap[t] for t in ts), enr))
        g._roots = {idmap[r] for r in roots}
        g._next_id = prev + 1
        return g, idmap

    # -- persistence --------------------------------------------------------

    def dump(self) -> str:
        """One fully expanded S-expression per root, in root id order."""
        lines = [format_expr(self.lift(r)) for r in self.roots]
        return "".join(line + "\n" for line in lines)

    @classmethod
    def load(cls, text: str, grounded: Iterable[str] = CORE_GROUNDED) -> "Metagraph":
        g = cls()
        for e in parse_all(text, grounded):
            g.add_expression(e)
        return g

    @classmethod
    def from_expressions(cls, exprs: Iterable[Expression]) -> "Metagraph":
        g = cls()
        for e in exprs:
            g.add_expression(e)
        return g

    # -- self-check ---------------------------------------------------------

    def check_invariants(self) -> None:
        """Rebuild every index from the edge set and compare."""
        struct = {e.key: e.id for e in self._edges.values()}
        assert struct == self._struct, "structural index out of sync"
        assert len(struct) == len(self._edges), "duplicate structure stored twice"
        by_label: dict[Label, set[int]] = defaultdict(set)
        incidence: dict[int, set[int]] = {i: set() for i in self._edges}
        for e in self._edges.values():
            by_label[e.label].add(e.id)
            for t in e.targets:
                assert t in self._edges, f"edge {e.id} has dangling target {t}"
                incidence[t].add(e.id)
        assert dict(by_label) == {k: v for k, v in self._by_label.items() if v}, "label index out of sync"
        assert incidence == self._incidence, "incidence index out of sync"
        assert self._roots <= set(self._edges), "root set mentions a missing edge"
        assert all(i < self._next_id for i in self._edges)

    def __repr__(self) -> str:
        return f"<Metagraph {len(self._edges)} edges, {len(self._roots)} roots>"
