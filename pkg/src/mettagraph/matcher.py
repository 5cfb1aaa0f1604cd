"""Pattern matching: unification over expressions and homomorphisms over metagraphs.

Two layers live here.  :func:`unify`, :func:`match` and :func:`transform`
work on expression trees with variables.  :func:`find_homomorphisms` works
directly on edges: a pattern edge maps to a host edge whose label inherits
from the pattern label (variable labels match anything), whose target list
contains the images of the pattern targets as an order-preserving
subsequence, and whose enrichment is the image of the pattern enrichment
under one witness map per enrichment kind.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Iterator, Literal, Sequence

from .enrichments import EnrichmentRegistry, default_registry
from .errors import TemplateVariableError
from .metagraph import Edge, Metagraph
from .syntax import Enriched, Expr, Expression, Variable, is_ground, variables
from .typesystem import TypeSystem, type_system

__all__ = [
    "structural_map",
    "Bindings",
    "HomomorphismMap",
    "MatchResult",
    "ConjunctionMatch",
    "unify",
    "substitute",
    "match",
    "match_all",
    "match_any",
    "transform",
    "match_enriched",
    "find_homomorphisms",
    "check_homomorphism",
    "label_compatible",
    "OrderingHeuristic",
    "LabelSelectivity",
    "SmallestCandidateSet",
]

Side = Literal["pattern", "target"]


class Bindings(Mapping):
    """Variable name -> referent expression, with the side each variable came from."""

    __slots__ = ("_values", "_sides")

    def __init__(self, values: Mapping[str, Expression] | None = None, sides: Mapping[str, Side] | None = None):
        self._values = dict(values or {})
        self._sides = {k: (sides or {}).get(k, "pattern") for k in self._values}

    def __getitem__(self, name: str) -> Expression:
        return self._values[name]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._values))

    def __len__(self) -> int:
        return len(self._values)

    def side(self, name: str) -> Side:
        return self._sides[name]

    @property
    def provenance(self) -> dict[str, Side]:
        return dict(self._sides)

    def merge(self, other: Mapping[str, Expression]) -> "Bindings | None":
        """Union of two binding sets, or None when they disagree."""
        values = dict(self._values)
        sides = dict(self._sides)
        for k, v in other.items():
            if k in values and values[k] != v:
                return None
            values[k] = v
            if isinstance(other, Bindings):
                sides.setdefault(k, other.side(k))
        return Bindings(values, sides)

    def __repr__(self) -> str:
        inner = ", ".join(f"${k}: {self._values[k]}" for k in self)
        return "{" + inner + "}"


EMPTY = Bindings()


# -- unification ------------------------------------------------------------


def _walk(x: Expression, s: dict[str, Expression]) -> Expression:
    while isinstance(x, Variable) and x.name in s:
        x = s[x.name]
    return x


def _occurs(name: str, x: Expression, s: dict[str, Expression]) -> bool:
    seen: set[int] = set()
    stack = [x]
    while stack:
        y = _walk(stack.pop(), s)
        if id(y) in seen or is_ground(y):
            continue
        seen.add(id(y))
        if isinstance(y, Variable):
            if y.name == name:
                return True
        elif isinstance(y, Expr):
            stack.extend(y.children)
        elif isinstance(y, Enriched):
            stack.append(y.inner)
    return False


def _resolve(x: Expression, s: dict[str, Expression], memo: dict[int, Expression] | None = None) -> Expression:
    memo = {} if memo is None else memo
    x = _walk(x, s)
    if is_ground(x):
        return x
    done = memo.get(id(x))
    if done is not None:
        return done
    out = x
    if isinstance(x, Expr):
        kids = tuple(_resolve(c, s, memo) for c in x.children)
        if any(a is not b for a, b in zip(kids, x.children)):
            out = Expr(kids)
    elif isinstance(x, Enriched):
        inner = _resolve(x.inner, s, memo)
        if inner is not x.inner:
            out = Enriched(inner, x.kind, x.payload)
    memo[id(x)] = out
    return out


def _unify(a: Expression, b: Expression, s: dict[str, Expression], pvars: set[str]) -> bool:
    a, b = _walk(a, s), _walk(b, s)
    if a == b:
        return True
    if is_ground(a) and is_ground(b):
        return False
    if isinstance(a, Variable) and isinstance(b, Variable):
        # pattern-side variables take precedence when both sides could bind
        if a.name in pvars or b.name not in pvars:
            s[a.name] = b
        else:
            s[b.name] = a
        return True
    if isinstance(a, Variable):
        if _occurs(a.name, b, s):
            return False
        s[a.name] = b
        return True
    if isinstance(b, Variable):
        if _occurs(b.name, a, s):
            return False
        s[b.name] = a
        return True
    if isinstance(a, Expr) and isinstance(b, Expr):
        if len(a) != len(b):
            return False
        return all(_unify(x, y, s, pvars) for x, y in zip(a.children, b.children))
    if isinstance(a, Enriched) and isinstance(b, Enriched):
        return a.kind == b.kind and a.payload == b.payload and _unify(a.inner, b.inner, s, pvars)
    return False


def unify(
    pattern: Expression,
    target: Expression,
    space: Metagraph | None = None,
    var_types: Mapping[str, Expression] | None = None,
    types: TypeSystem | None = None,
) -> Bindings | None:
    """Most general unifier of ``pattern`` and ``target``, or None.

    Variables are bound with the occurs check.  ``var_types`` constrains
    variables to referents whose type inherits from the given type; the type
    facts come from ``types`` or else from ``space``.
    """
    pvars = variables(pattern)
    s: dict[str, Expression] = {}
    if not _unify(pattern, target, s, pvars):
        return None
    memo: dict[int, Expression] = {}
    values = {k: _resolve(v, s, memo) for k, v in s.items()}
    if var_types:
        ts = types if types is not None else (type_system(space) if space is not None else TypeSystem([]))
        for name, want in var_types.items():
            got = values.get(name)
            if got is None or isinstance(got, Variable):
                continue
            if not any(ts.inherits(t, want) for t in ts.infer(got)):
                return None
    sides: dict[str, Side] = {k: ("pattern" if k in pvars else "target") for k in values}
    return Bindings(values, sides)


def substitute(e: Expression, b: Mapping[str, Expression]) -> Expression:
    """Replace every bound variable in ``e`` by its referent (one pass).

    Unchanged sub-terms are returned as the same objects.
    """
    memo: dict[int, Expression] = {}

    def go(x: Expression) -> Expression:
        done = memo.get(id(x))
        if done is not None:
            return done
        if is_ground(x):
            return x
        out = x
        if isinstance(x, Variable):
            out = b.get(x.name, x)
        elif isinstance(x, Expr):
            kids = tuple(go(c) for c in x.children)
            if any(k is not c for k, c in zip(kids, x.children)):
                out = Expr(kids)
        elif isinstance(x, Enriched):
            inner = go(x.inner)
            if inner is not x.inner:
                out = Enriched(inner, x.kind, x.payload)
        memo[id(x)] = out
        return out

    return go(e)


# -- matching against a space ---------------------------------------------


@dataclass(frozen=True)
class HomomorphismMap:
    mapping: dict[int, int]
    witness: dict[str, str] = field(default_factory=dict)

    def key(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.mapping.items()))

    def __getitem__(self, pattern_id: int) -> int:
        return self.mapping[pattern_id]

    def compose(self, other: "HomomorphismMap") -> "HomomorphismMap":
        """``other`` after ``self``."""
        return HomomorphismMap({p: other.mapping[h] for p, h in self.mapping.items()})


@dataclass(frozen=True)
class MatchResult:
    bindings: Bindings
    matched_root: int
    hom: HomomorphismMap


@dataclass(frozen=True)
class ConjunctionMatch:
    bindings: Bindings
    roots: tuple[int, ...]


def _tree_hom(pattern: Metagraph, pid: int, host: Metagraph, hid: int, out: dict[int, int]) -> None:
    out.setdefault(pid, hid)
    pe, he = pattern.edge(pid), host.edge(hid)
    if isinstance(pe.label, Variable) and not pe.targets:
        return
    if len(pe.targets) == len(he.targets) and pe.label == he.label:
        for pt, ht in zip(pe.targets, he.targets):
            _tree_hom(pattern, pt, host, ht, out)


def structural_map(pattern: Metagraph, pid: int, host: Metagraph, hid: int) -> dict[int, int]:
    """Edge map induced by laying the tree below ``pid`` over the one below ``hid``."""
    out: dict[int, int] = {}
    _tree_hom(pattern, pid, host, hid, out)
    return out


def match(
    space: Metagraph,
    pattern: Expression,
    var_types: Mapping[str, Expression] | None = None,
) -> list[MatchResult]:
    """One result per root of ``space`` that unifies with ``pattern``, by root id.

    The pattern is lowered into a private scratch store; ``space`` is only read.
    """
    scratch = Metagraph()
    pid = scratch.add_expression(pattern)
    ts = type_system(space) if var_types else None
    results = []
    for r in space.roots:
        b = unify(pattern, space.lift(r), var_types=var_types, types=ts)
        if b is None:
            continue
        hom: dict[int, int] = {}
        _tree_hom(scratch, pid, space, r, hom)
        results.append(MatchResult(b, r, HomomorphismMap(hom)))
    return results


def match_all(
    space: Metagraph,
    patterns: Sequence[Expression],
    var_types: Mapping[str, Expression] | None = None,
) -> list[ConjunctionMatch]:
    """Conjunction: every pattern matches some root under shared bindings."""
    if not patterns:
        return [ConjunctionMatch(EMPTY, ())]
    out = []
    first, rest = patterns[0], patterns[1:]
    for m in match(space, first, var_types):
        narrowed = [substitute(p, m.bindings) for p in rest]
        for tail in match_all(space, narrowed, var_types):
            merged = m.bindings.merge(tail.bindings)
            if merged is not None:
                out.append(ConjunctionMatch(merged, (m.matched_root,) + tail.roots))
    return out


def match_any(
    space: Metagraph,
    patterns: Sequence[Expression],
    var_types: Mapping[str, Expression] | None = None,
) -> list[MatchResult]:
    """Disjunction: union of per-pattern results, ordered by root id."""
    seen = set()
    out = []
    for p in patterns:
        for m in match(space, p, var_types):
            key = (m.matched_root, tuple(m.bindings.items()))
            if key not in seen:
                seen.add(key)
                out.append(m)
    out.sort(key=lambda m: m.matched_root)
    return out


def transform(
    space: Metagraph,
    pattern: Expression,
    template: Expression,
    var_types: Mapping[str, Expression] | None = None,
) -> list[Expression]:
    """Instantiate ``template`` once per match of ``pattern``, in match order."""
    extra = variables(template) - variables(pattern)
    if extra:
        names = ", ".join("$" + n for n in sorted(extra))
        raise TemplateVariableError(f"template variables not bound by the pattern: {names}")
    return [substitute(template, m.bindings) for m in match(space, pattern, var_types)]


def match_enriched(
    space: Metagraph,
    pattern: Enriched,
    kind: str,
    threshold: float,
    registry: EnrichmentRegistry | None = None,
) -> list[MatchResult]:
    """Match roots carrying a ``kind`` enrichment whose proximity to the
    pattern's payload is strictly greater than ``threshold``."""
    registry = registry or default_registry()
    k = registry.get(kind)
    if not isinstance(pattern, Enriched):
        raise ValueError("an enriched match needs an enriched pattern")
    query = pattern.payload
    scratch = Metagraph()
    pid = scratch.add_expression(pattern.inner)
    results = []
    for r in space.roots:
        enr = space.edge(r).enrichment
        if enr is None or enr.kind != kind:
            continue
        host = space.lift(r)
        assert isinstance(host, Enriched)
        b = unify(pattern.inner, host.inner)
        if b is None:
            continue
        if registry.proximity(k.name, query, enr.payload) > threshold:
            hom: dict[int, int] = {}
            _tree_hom(scratch, pid, space, r, hom)
            results.append(MatchResult(b, r, HomomorphismMap(hom)))
    return results


# -- metagraph homomorphisms --------------------------------------------------


def label_compatible(pattern_edge: Edge, host_edge: Edge, types: TypeSystem) -> bool:
    if isinstance(pattern_edge.label, Variable):
        return True
    return types.inherits(host_edge.label, pattern_edge.label)


def _is_subsequence(needle: Sequence[int], hay: Sequence[int]) -> bool:
    it = iter(hay)
    return all(any(x == y for y in it) for x in needle)


def _witness_options(
    pattern_edge: Edge, host_edge: Edge, registry: EnrichmentRegistry
) -> tuple[str, list[str]] | None:
    """(kind, witnesses sending the pattern payload to the host payload)."""
    pe = pattern_edge.enrichment
    he = host_edge.enrichment
    if he is None or he.kind != pe.kind:
        return None
    kind = registry.resolve(pe.kind)
    return pe.kind, [w for w in kind.witness_names() if kind.maps(w, pe.payload, he.payload)]


def check_homomorphism(
    pattern: Metagraph,
    host: Metagraph,
    mapping: Mapping[int, int],
    types: TypeSystem | None = None,
    registry: EnrichmentRegistry | None = None,
) -> dict[str, str] | None:
    """Validate a total edge map; returns the per-kind witness choice or None."""
    types = types if types is not None else type_system(host)
    registry = registry or default_registry()
    if set(mapping) != set(pattern.ids()):
        return None
    options: dict[str, list[str]] = {}
    for pid in pattern.ids():
        hid = mapping[pid]
        if hid not in host:
            return None
        pe, he = pattern.edge(pid), host.edge(hid)
        if not label_compatible(pe, he, types):
            return None
        if not _is_subsequence([mapping[t] for t in pe.targets], he.targets):
            return None
        if pe.enrichment is not None:
            opt = _witness_options(pe, he, registry)
            if opt is None:
                return None
            kind, ws = opt
            options[kind] = [w for w in options.get(kind, ws) if w in ws]
            if not options[kind]:
                return None
    return {k: ws[0] for k, ws in options.items()}


class OrderingHeuristic:
    """Orders the search: which pattern edge to extend next, and which host
    edge to try first.  Lower priority values go first; ties fall back to id
    order."""

    def priority(self, pattern: Metagraph, host: Metagraph, pid: int, hid: int) -> float:
        return 0.0

    def pattern_order(self, pattern: Metagraph, host: Metagraph, candidates: Mapping[int, list[int]]) -> list[int]:
        def best(pid: int) -> float:
            hs = candidates[pid]
            return min((self.priority(pattern, host, pid, h) for h in hs), default=0.0)

        return sorted(candidates, key=lambda p: (best(p), p))

    def candidate_order(self, pattern: Metagraph, host: Metagraph, pid: int, hids: list[int]) -> list[int]:
        return sorted(hids, key=lambda h: (self.priority(pattern, host, pid, h), h))


class LabelSelectivity(OrderingHeuristic):
    """Rarest host label first."""

    def priority(self, pattern: Metagraph, host: Metagraph, pid: int, hid: int) -> float:
        return host.label_count(host.edge(hid).label)


class SmallestCandidateSet(OrderingHeuristic):
    """Pattern edges with the fewest viable host edges first."""

    def pattern_order(self, pattern: Metagraph, host: Metagraph, candidates: Mapping[int, list[int]]) -> list[int]:
        return sorted(candidates, key=lambda p: (len(candidates[p]), p))


def find_homomorphisms(
    pattern: Metagraph,
    host: Metagraph,
    limit: int | None = None,
    heuristic: OrderingHeuristic | None = None,
    types: TypeSystem | None = None,
    registry: EnrichmentRegistry | None = None,
) -> list[HomomorphismMap]:
    """All homomorphisms ``pattern -> host`` (maps need not be injective).

    Without a heuristic the result is in lexicographic order of the host ids
    assigned to pattern edges taken in ascending id order.
    """
    if len(pattern) == 0:
        raise ValueError("pattern metagraph is empty")
    types = types if types is not None else type_system(host)
    registry = registry or default_registry()

    candidates: dict[int, list[int]] = {}
    for pid in pattern.ids():
        pe = pattern.edge(pid)
        cs = []
        for he in host:
            if len(he.targets) < len(pe.targets) or not label_compatible(pe, he, types):
                continue
            if pe.enrichment is not None:
                opt = _witness_options(pe, he, registry)
                if opt is None or not opt[1]:
                    continue
            cs.append(he.id)
        if not cs:
            return []
        candidates[pid] = cs

    if heuristic is None:
        order = sorted(candidates)
    else:
        order = heuristic.pattern_order(pattern, host, candidates)
        candidates = {p: heuristic.candidate_order(pattern, host, p, hs) for p, hs in candidates.items()}

    # structural constraint of edge c is checkable once c and its targets are assigned
    position = {p: i for i, p in enumerate(order)}
    checks: list[list[int]] = [[] for _ in order]
    for pid in order:
        last = max([position[pid]] + [position[t] for t in pattern.edge(pid).targets])
        checks[last].append(pid)

    results: list[HomomorphismMap] = []
    assign: dict[int, int] = {}
    witnesses: dict[str, list[str]] = {}

    def extend(depth: int) -> bool:
        if depth == len(order):
            hom = HomomorphismMap(dict(sorted(assign.items())), {k: ws[0] for k, ws in witnesses.items()})
            results.append(hom)
            return limit is not None and len(results) >= limit
        pid = order[depth]
        pe = pattern.edge(pid)
        for hid in candidates[pid]:
            assign[pid] = hid
            saved = None
            ok = True
            if pe.enrichment is not None:
                kind, ws = _witness_options(pe, host.edge(hid), registry)
                saved = (kind, witnesses.get(kind))
                narrowed = [w for w in witnesses.get(kind, ws) if w in ws]
                witnesses[kind] = narrowed
                ok = bool(narrowed)
            if ok:
                for c in checks[depth]:
                    ce = pattern.edge(c)
                    if not _is_subsequence([assign[t] for t in ce.targets], host.edge(assign[c]).targets):
                        ok = False
                        break
            if ok and extend(depth + 1):
                return True
            if saved is not None:
                kind, prev = saved
                if prev is None:
                    del witnesses[kind]
                else:
                    witnesses[kind] = prev
            del assign[pid]
        return False

    extend(0)
    return results

