"""Independent reference implementations used to check the library.

Everything here is deliberately naive: exhaustive enumeration, full scans
and boolean matrix powering.  None of it imports the code under test except
for plain data types and the enrichment kinds being exercised.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Sequence

import numpy as np

from mettagraph.enrichments import EnrichmentRegistry, identity_bytes_kind
from mettagraph.metagraph import Metagraph
from mettagraph.syntax import Enriched, Expr, Expression, Symbol, Variable

KIND_WORDS = {Symbol("Type"), Symbol("Enrichment")}


# -- metagraph ------------------------------------------------------------------


def incident_scan(g: Metagraph, i: int) -> set[int]:
    return {e.id for e in g if i in e.targets}


def reachable_from(g: Metagraph, start: Iterable[int]) -> set[int]:
    """Edges that (transitively) mention any edge in ``start``, plus ``start``."""
    hit = set(start)
    changed = True
    while changed:
        changed = False
        for e in g:
            if e.id not in hit and any(t in hit for t in e.targets):
                hit.add(e.id)
                changed = True
    return hit


def tree_size_bound(e: Expression) -> int:
    """Number of distinct sub-trees of ``e`` (an upper bound on new edges)."""
    seen = set()

    def walk(x):
        seen.add(x)
        if isinstance(x, Expr):
            for c in x.children:
                walk(c)
        elif isinstance(x, Enriched):
            walk(x.inner)

    walk(e)
    return len(seen)


def canon(g: Metagraph, i: int):
    """Id-free nested-tuple form of an edge."""
    e = g.edge(i)
    return (e.label, tuple(canon(g, t) for t in e.targets), e.enrichment)


def canonical_content(g: Metagraph) -> tuple[frozenset, frozenset]:
    return frozenset(canon(g, e.id) for e in g), frozenset(canon(g, r) for r in g.roots)


def isomorphic(a: Metagraph, b: Metagraph) -> bool:
    """Brute-force search for an edge bijection preserving labels, ordered
    targets, enrichments and root membership."""
    if len(a) != len(b) or len(a.roots) != len(b.roots):
        return False
    A = a.ids()
    B = b.ids()

    def sig(g, i):
        e = g.edge(i)
        return (e.label, len(e.targets), e.enrichment, g.is_root(i))

    cands = {x: [y for y in B if sig(a, x) == sig(b, y)] for x in A}
    order = sorted(A, key=lambda x: len(cands[x]))
    f: dict[int, int] = {}
    used: set[int] = set()

    def ok(x):
        ex = a.edge(x)
        y = f[x]
        for k, t in enumerate(ex.targets):
            if t in f and b.edge(y).targets[k] != f[t]:
                return False
        for z in f:  # referrers already placed
            ez = a.edge(z)
            for k, t in enumerate(ez.targets):
                if t == x and b.edge(f[z]).targets[k] != y:
                    return False
        return True

    def go(n):
        if n == len(order):
            return True
        x = order[n]
        for y in cands[x]:
            if y in used:
                continue
            f[x] = y
            used.add(y)
            if ok(x) and go(n + 1):
                return True
            used.discard(y)
            del f[x]
        return False

    return go(0)


# -- types ------------------------------------------------------------------------


def closure(nodes: Sequence, pairs: Iterable[tuple]) -> dict[tuple, bool]:
    """Reflexive-transitive closure by repeated boolean matrix squaring."""
    idx = {n: k for k, n in enumerate(nodes)}
    n = len(nodes)
    m = np.eye(n, dtype=bool)
    for a, b in pairs:
        m[idx[a], idx[b]] = True
    while True:
        nxt = (m.astype(np.int64) @ m.astype(np.int64)) > 0
        if (nxt == m).all():
            break
        m = nxt
    return {(x, y): bool(m[idx[x], idx[y]]) for x in nodes for y in nodes}


class TypeOracle:
    """Membership vs subtyping read off a list of ``(subject, type)`` facts:
    a fact is subtyping when its subject is itself a type (declared with a
    kind word, or used as somebody's type)."""

    def __init__(self, facts: Sequence[tuple[Expression, Expression]]):
        self.facts = list(facts)
        types = {b for _, b in facts} | {a for a, b in facts if b in KIND_WORDS}
        sub = [(a, b) for a, b in facts if a in types]
        nodes = sorted({x for p in sub for x in p} | types, key=repr)
        self.nodes = set(nodes)
        self.table = closure(nodes, sub)

    def inherits(self, a, b) -> bool:
        if a == b:
            return True
        return self.table.get((a, b), False)

    def declared(self, subject) -> list:
        return [b for a, b in self.facts if a == subject]

    @classmethod
    def of_space(cls, g: Metagraph) -> "TypeOracle":
        facts = []
        for r in g.roots:
            e = g.lift(r)
            if isinstance(e, Expr) and len(e) == 3 and e[0] == Symbol(":"):
                facts.append((e[1], e[2]))
        return cls(facts)


# -- matching ------------------------------------------------------------------------


def subterms(e: Expression) -> list[Expression]:
    out = [e]
    if isinstance(e, Expr):
        for c in e.children:
            out.extend(subterms(c))
    return out


def naive_substitute(e: Expression, b: Mapping[str, Expression]) -> Expression:
    if isinstance(e, Variable):
        return b.get(e.name, e)
    if isinstance(e, Expr):
        return Expr(tuple(naive_substitute(c, b) for c in e.children))
    return e


def pattern_vars(e: Expression) -> list[str]:
    out: list[str] = []
    for x in subterms(e):
        if isinstance(x, Variable) and x.name not in out:
            out.append(x.name)
    return out


def brute_force_match(
    g: Metagraph,
    pattern: Expression,
    var_types: Mapping[str, Expression] | None = None,
) -> list[tuple[int, dict]]:
    """For ground spaces: try every assignment of pattern variables to
    sub-terms of each root."""
    types = TypeOracle.of_space(g)
    names = pattern_vars(pattern)
    out = []
    for r in g.roots:
        root = g.lift(r)
        pool = list(dict.fromkeys(subterms(root)))
        found = None
        for combo in itertools.product(pool, repeat=len(names)):
            b = dict(zip(names, combo))
            if naive_substitute(pattern, b) != root:
                continue
            if var_types and not all(
                any(types.inherits(t, want) for t in types.declared(b[v])) for v, want in var_types.items() if v in b
            ):
                continue
            found = b
            break
        if found is not None:
            out.append((r, found))
    return out


def _order_preserving(needle: Sequence[int], hay: Sequence[int]) -> bool:
    """Is ``needle`` obtainable from ``hay`` by deleting items?"""
    if not needle:
        return True
    if not hay:
        return False
    if needle[0] == hay[0]:
        return _order_preserving(needle[1:], hay[1:])
    return _order_preserving(needle, hay[1:])


def brute_force_homomorphisms(
    pattern: Metagraph,
    host: Metagraph,
    types: TypeOracle,
    registry: EnrichmentRegistry,
) -> list[dict[int, int]]:
    """Every total edge map, filtered by the homomorphism conditions."""
    P = pattern.ids()
    H = host.ids()
    out = []
    for image in itertools.product(H, repeat=len(P)):
        f = dict(zip(P, image))
        good = True
        per_kind: dict[str, set[str]] = {}
        for p in P:
            pe, he = pattern.edge(p), host.edge(f[p])
            if not isinstance(pe.label, Variable) and not types.inherits(he.label, pe.label):
                good = False
                break
            if not _order_preserving([f[t] for t in pe.targets], list(he.targets)):
                good = False
                break
            if pe.enrichment is not None:
                if he.enrichment is None or he.enrichment.kind != pe.enrichment.kind:
                    good = False
                    break
                kind = registry._kinds.get(pe.enrichment.kind) or identity_bytes_kind(pe.enrichment.kind)
                ws = {w for w in kind.witness_names() if kind.maps(w, pe.enrichment.payload, he.enrichment.payload)}
                per_kind[pe.enrichment.kind] = per_kind.get(pe.enrichment.kind, ws) & ws
                if not per_kind[pe.enrichment.kind]:
                    good = False
                    break
        if good:
            out.append(f)
    return out


# -- rewriting -----------------------------------------------------------------------


def gluing_oracle(host: Metagraph, L: Metagraph, kept: set[int], m: Mapping[int, int]) -> bool:
    """True when the DPO gluing condition holds (incidence scan)."""
    delete = {m[x] for x in L.ids() if x not in kept}
    preserve = {m[x] for x in kept}
    if delete & preserve:
        return False
    for e in host:
        if e.id not in delete and any(t in delete for t in e.targets):
            return False
    return True


def spo_oracle(host: Metagraph, L: Metagraph, R: Metagraph, r: Mapping[int, int], m: Mapping[int, int]):
    """Result content of an SPO step computed on id-free canonical forms.

    Returns (edge set, root set) as canonical tuples, comparable with
    :func:`canonical_content` of the engine's result.
    """
    deleted = {m[x] for x in L.ids() if x not in r}
    # preserved edges may be relabelled or retargeted by the rule
    back = {v: k for k, v in r.items()}
    new_label: dict[int, object] = {}
    new_targets: dict[int, list] = {}
    new_enr: dict[int, object] = {}
    for lid, rid in sorted(r.items()):
        h = m[lid]
        if h in deleted:
            continue
        le, re_ = L.edge(lid), R.edge(rid)
        if re_.label != le.label and not isinstance(re_.label, Variable):
            new_label[h] = re_.label
        if re_.enrichment != le.enrichment:
            new_enr[h] = re_.enrichment
        if [back.get(t) for t in re_.targets] != list(le.targets):
            new_targets[h] = [("R", t) if t not in back else ("H", m[back[t]]) for t in re_.targets]

    nodes = {("H", e.id) for e in host if e.id not in deleted}
    nodes |= {("R", i) for i in R.ids() if i not in back}

    def targets(n):
        side, i = n
        if side == "R":
            return [("R", t) if t not in back else ("H", m[back[t]]) for t in R.edge(i).targets]
        if i in new_targets:
            return new_targets[i]
        return [("H", t) for t in host.edge(i).targets]

    # cascade: drop anything pointing at a missing node
    changed = True
    while changed:
        changed = False
        for n in list(nodes):
            if any(t not in nodes for t in targets(n)):
                nodes.discard(n)
                changed = True

    def label(n):
        side, i = n
        if side == "R":
            return R.edge(i).label, R.edge(i).enrichment
        e = host.edge(i)
        return new_label.get(i, e.label), new_enr.get(i, e.enrichment)

    memo: dict = {}

    def form(n):
        if n not in memo:
            lab, enr = label(n)
            memo[n] = (lab, tuple(form(t) for t in targets(n)), enr)
        return memo[n]

    edges = frozenset(form(n) for n in nodes)
    roots = {("H", i) for i in host.roots} | {("R", i) for i in R.roots if i not in back}
    return edges, frozenset(form(n) for n in roots if n in nodes)
