"""Single- and double-pushout rewriting of metagraphs.

Rules and hosts are :class:`~mettagraph.metagraph.Metagraph` values and
matches are :class:`~mettagraph.matcher.HomomorphismMap` values.  Applying
a rule never mutates the host; every derivation carries a fresh result
store together with the tracking maps ``rho`` (host -> result, undefined on
deleted edges) and ``mu`` (rule right-hand side -> result).

A preserved edge keeps its host label, targets and enrichment unless the
right-hand side changes them relative to the left-hand side, in which case
the right-hand side wins (a variable label on the right keeps the host
label).  Because results are hash-consed, a created edge that is
structurally equal to a surviving edge is identified with it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Mapping, Union

from .enrichments import EnrichmentRegistry
from .errors import InvalidMatchError, RuleError
from .matcher import HomomorphismMap, check_homomorphism, find_homomorphisms
from .metagraph import Metagraph
from .syntax import CORE_GROUNDED, Expr, Expression, Grounded, Symbol, Variable, format_expr, parse_all
from .typesystem import TypeSystem

__all__ = [
    "SPORule",
    "DPORule",
    "Rule",
    "Derivation",
    "GluingViolation",
    "gluing_violation",
    "rule_from_expr",
    "apply_spo",
    "apply_dpo",
    "apply_rule",
    "find_rule_matches",
    "derive_all",
    "dpo_to_spo",
    "parse_rules",
    "format_rule",
    "edge_at",
    "path_of",
]


def _check_injective(name: str, m: Mapping[int, int], dom: Metagraph, cod: Metagraph, total: bool) -> None:
    for a, b in m.items():
        if a not in dom:
            raise RuleError(f"{name}: {a} is not an edge of the source graph")
        if b not in cod:
            raise RuleError(f"{name}: {b} is not an edge of the target graph")
    if len(set(m.values())) != len(m):
        raise RuleError(f"{name} is not injective")
    if total and set(m) != set(dom.ids()):
        raise RuleError(f"{name} is not total")


@dataclass(frozen=True)
class SPORule:
    """``L --r--> R`` with ``r`` a partial injective edge map."""

    L: Metagraph
    R: Metagraph
    r: dict[int, int]
    name: str = ""

    def __post_init__(self) -> None:
        _check_injective("r", self.r, self.L, self.R, total=False)


@dataclass(frozen=True)
class DPORule:
    """``L <--l-- K --k--> R`` with ``l`` and ``k`` total and injective."""

    L: Metagraph
    K: Metagraph
    R: Metagraph
    l: dict[int, int]
    k: dict[int, int]
    name: str = ""

    def __post_init__(self) -> None:
        _check_injective("l", self.l, self.K, self.L, total=True)
        _check_injective("k", self.k, self.K, self.R, total=True)

    @property
    def preserved(self) -> dict[int, int]:
        """The induced partial map L -> R."""
        return {self.l[x]: self.k[x] for x in self.K.ids()}


Rule = Union[SPORule, DPORule]


@dataclass(frozen=True)
class GluingViolation:
    reason: Literal["dangling", "identification"]
    edges: frozenset[int]

    def __bool__(self) -> bool:
        return False


@dataclass
class Derivation:
    rule: Rule
    match: HomomorphismMap
    result: Metagraph
    rho: dict[int, int]
    mu: dict[int, int]
    deleted: frozenset[int] = frozenset()
    created: frozenset[int] = frozenset()
    intermediate: Metagraph | None = None


def dpo_to_spo(rule: DPORule) -> SPORule:
    return SPORule(rule.L, rule.R, rule.preserved, rule.name)


# -- application -------------------------------------------------------------


def _validate(host: Metagraph, L: Metagraph, m: HomomorphismMap, types: TypeSystem | None, registry) -> None:
    if check_homomorphism(L, host, m.mapping, types, registry) is None:
        raise InvalidMatchError("match is not a homomorphism from the rule's left-hand side into the host")


def _creation_order(R: Metagraph, created: set[int]) -> list[int]:
    order: list[int] = []
    state: dict[int, int] = {}

    def visit(i: int) -> None:
        if state.get(i):
            return
        state[i] = 1
        for t in R.edge(i).targets:
            if t in created:
                visit(t)
        order.append(i)

    for i in sorted(created):
        visit(i)
    return order


def _glue(
    host: Metagraph,
    L: Metagraph,
    R: Metagraph,
    preserve: Mapping[int, int],
    m: Mapping[int, int],
    cascade: bool,
):
    """Shared core: delete, create, retarget, then quotient into a fresh store."""
    table = {e.id: [e.label, list(e.targets), e.enrichment] for e in host}
    deleted = {m[x] for x in L.ids() if x not in preserve}
    back = {rid: lid for lid, rid in preserve.items()}
    created_ids = {rid for rid in R.ids() if rid not in back}

    fresh: dict[int, int] = {}
    nxt = max([host._next_id] + [i + 1 for i in table])
    order = _creation_order(R, created_ids)
    for rid in order:
        fresh[rid] = nxt
        nxt += 1

    def resolve(rid: int) -> int:
        return m[back[rid]] if rid in back else fresh[rid]

    for rid in order:
        e = R.edge(rid)
        table[fresh[rid]] = [e.label, [resolve(t) for t in e.targets], e.enrichment]

    for lid in sorted(preserve):
        rid = preserve[lid]
        hid = m[lid]
        if hid in deleted:
            continue
        le, re_ = L.edge(lid), R.edge(rid)
        row = table[hid]
        if re_.label != le.label and not isinstance(re_.label, Variable):
            row[0] = re_.label
        if re_.enrichment != le.enrichment:
            row[2] = re_.enrichment
        if [back.get(t) for t in re_.targets] != list(le.targets):
            row[1] = [resolve(t) for t in re_.targets]

    roots = set(host.roots) | {fresh[r] for r in R.roots if r in fresh}
    removed = set()
    for d in deleted:
        if d in table:
            del table[d]
            removed.add(d)
    dangling = {i for i, row in table.items() if any(t not in table for t in row[1])}
    if dangling and not cascade:
        raise AssertionError("gluing produced dangling edges")
    while dangling:
        for i in dangling:
            del table[i]
        removed |= dangling
        dangling = {i for i, row in table.items() if any(t not in table for t in row[1])}

    roots &= set(table)
    result, idmap = Metagraph.quotient({i: tuple(row) for i, row in table.items()}, roots)
    rho = {g: idmap[g] for g in host.ids() if g in idmap}
    mu = {rid: idmap[resolve(rid)] for rid in R.ids() if resolve(rid) in idmap}
    created = frozenset(idmap[fresh[r]] for r in order if fresh[r] in idmap)
    return result, rho, mu, frozenset(removed), created


def apply_spo(
    host: Metagraph,
    rule: SPORule,
    m: HomomorphismMap,
    types: TypeSystem | None = None,
    registry: EnrichmentRegistry | None = None,
) -> Derivation:
    """Apply an SPO rule at ``m``.  Edges left dangling are deleted too."""
    _validate(host, rule.L, m, types, registry)
    result, rho, mu, deleted, created = _glue(host, rule.L, rule.R, rule.r, m.mapping, cascade=True)
    return Derivation(rule, m, result, rho, mu, deleted, created)


def gluing_violation(host: Metagraph, rule: DPORule, m: HomomorphismMap) -> GluingViolation | None:
    keep_l = set(rule.l.values())
    delete = {m[x] for x in rule.L.ids() if x not in keep_l}
    preserve = {m[x] for x in keep_l}
    clash = delete & preserve
    if clash:
        return GluingViolation("identification", frozenset(clash))
    hanging = set()
    for d in delete:
        hanging |= host.incident(d) - delete
    if hanging:
        return GluingViolation("dangling", frozenset(hanging))
    return None


def apply_dpo(
    host: Metagraph,
    rule: DPORule,
    m: HomomorphismMap,
    types: TypeSystem | None = None,
    registry: EnrichmentRegistry | None = None,
) -> Derivation | GluingViolation:
    """Apply a DPO rule at ``m``, or report why the gluing condition fails."""
    _validate(host, rule.L, m, types, registry)
    bad = gluing_violation(host, rule, m)
    if bad is not None:
        return bad
    keep_l = set(rule.l.values())
    context = host.copy()
    pending = {m[x] for x in rule.L.ids() if x not in keep_l}
    while pending:
        # remove referrers before their targets; the gluing check guarantees
        # every referrer of a deleted edge is itself deleted
        free = [x for x in pending if not (context.incident(x) - {x})]
        for x in free or sorted(pending):
            if x in context:
                context.remove_edge(x, "forbid" if free else "cascade")
            pending.discard(x)
    result, rho, mu, deleted, created = _glue(host, rule.L, rule.R, rule.preserved, m.mapping, cascade=False)
    return Derivation(rule, m, result, rho, mu, deleted, created, intermediate=context)


def apply_rule(host: Metagraph, rule: Rule, m: HomomorphismMap, **kw) -> Derivation | GluingViolation:
    if isinstance(rule, DPORule):
        return apply_dpo(host, rule, m, **kw)
    return apply_spo(host, rule, m, **kw)


def find_rule_matches(host: Metagraph, rule: Rule, **kw) -> list[HomomorphismMap]:
    return find_homomorphisms(rule.L, host, **kw)


def derive_all(host: Metagraph, rule: Rule, **kw) -> list[Derivation]:
    """One derivation per match (for DPO, per match satisfying the gluing condition)."""
    out = []
    for m in find_rule_matches(host, rule, **kw):
        d = apply_rule(host, rule, m)
        if isinstance(d, Derivation):
            out.append(d)
    return out


# -- rule files --------------------------------------------------------------
#
#   (!rule spo <L> <R> ((<path-in-L> <path-in-R>) ...))
#   (!rule dpo <L> <K> <R> ((<path-in-K> <path-in-L>) ...) ((<path-in-K> <path-in-R>) ...))
#
# A path is a list of target indices from the root, e.g. () or (1 0).

RULE_HEAD = Symbol("!rule")


def edge_at(g: Metagraph, root: int, path: Iterable[int]) -> int:
    i = root
    for step in path:
        targets = g.edge(i).targets
        if not 0 <= step < len(targets):
            raise RuleError(f"path step {step} out of range at edge {i}")
        i = targets[step]
    return i


def path_of(g: Metagraph, root: int, target: int) -> tuple[int, ...]:
    """Shortest (then lexicographically smallest) path from root to target."""
    frontier = [(root, ())]
    seen = {root}
    while frontier:
        nxt = []
        for i, p in frontier:
            if i == target:
                return p
            for k, t in enumerate(g.edge(i).targets):
                if t not in seen:
                    seen.add(t)
                    nxt.append((t, p + (k,)))
        frontier = nxt
    raise RuleError(f"edge {target} is not reachable from {root}")


def _path(e: Expression) -> tuple[int, ...]:
    if not isinstance(e, Expr) or not all(isinstance(c, Grounded) and c.name.lstrip("-").isdigit() for c in e):
        raise RuleError(f"bad path {format_expr(e)}")
    return tuple(int(c.name) for c in e)


def _pairs(e: Expression) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    if not isinstance(e, Expr):
        raise RuleError("mapping pairs must be a list")
    out = []
    for pair in e:
        if not isinstance(pair, Expr) or len(pair) != 2:
            raise RuleError(f"bad mapping pair {format_expr(pair)}")
        out.append((_path(pair[0]), _path(pair[1])))
    return out


def _graph(e: Expression) -> tuple[Metagraph, int]:
    g = Metagraph()
    return g, g.add_expression(e)


def _extend_structurally(src: Metagraph, dst: Metagraph, m: dict[int, int], a: int, b: int) -> None:
    """Map a -> b and, where arities agree, their targets pairwise."""
    if a in m:
        return
    m[a] = b
    ta, tb = src.edge(a).targets, dst.edge(b).targets
    if len(ta) == len(tb):
        for x, y in zip(ta, tb):
            _extend_structurally(src, dst, m, x, y)


def rule_from_expr(e: Expression) -> Rule:
    if not (isinstance(e, Expr) and len(e) >= 2 and e[0] == RULE_HEAD):
        raise RuleError("not a !rule form")
    kind = e[1]
    if kind == Symbol("spo"):
        if len(e) != 5:
            raise RuleError("(!rule spo L R pairs)")
        L, lroot = _graph(e[2])
        R, rroot = _graph(e[3])
        r: dict[int, int] = {}
        for pl, pr in _pairs(e[4]):
            r[edge_at(L, lroot, pl)] = edge_at(R, rroot, pr)
        return SPORule(L, R, r)
    if kind == Symbol("dpo"):
        if len(e) != 7:
            raise RuleError("(!rule dpo L K R l-pairs k-pairs)")
        L, lroot = _graph(e[2])
        K, kroot = _graph(e[3])
        R, rroot = _graph(e[4])
        l: dict[int, int] = {}
        for pk, pl in _pairs(e[5]):
            _extend_structurally(K, L, l, edge_at(K, kroot, pk), edge_at(L, lroot, pl))
        k: dict[int, int] = {}
        for pk, pr in _pairs(e[6]):
            _extend_structurally(K, R, k, edge_at(K, kroot, pk), edge_at(R, rroot, pr))
        return DPORule(L, K, R, l, k)
    raise RuleError(f"unknown rule kind {format_expr(kind)}")


def parse_rules(text: str, grounded: Iterable[str] = CORE_GROUNDED) -> list[Rule]:
    """Read every ``!rule`` form in ``text``; other expressions are skipped."""
    out = []
    for e in parse_all(text, grounded):
        if isinstance(e, Expr) and len(e) and e[0] == RULE_HEAD:
            out.append(rule_from_expr(e))
    return out


def _single_root(g: Metagraph) -> int:
    if len(g.roots) != 1:
        raise RuleError("rule files need single-rooted graphs")
    return g.roots[0]


def _path_expr(p: tuple[int, ...]) -> Expr:
    return Expr(tuple(Grounded(str(i)) for i in p))


def _pairs_expr(src: Metagraph, sroot: int, dst: Metagraph, droot: int, m: Mapping[int, int]) -> Expr:
    return Expr(
        tuple(
            Expr((_path_expr(path_of(src, sroot, a)), _path_expr(path_of(dst, droot, b))))
            for a, b in sorted(m.items())
        )
    )


def format_rule(rule: Rule) -> str:
    lroot, rroot = _single_root(rule.L), _single_root(rule.R)
    if isinstance(rule, SPORule):
        form = Expr(
            (RULE_HEAD, Symbol("spo"), rule.L.lift(lroot), rule.R.lift(rroot), _pairs_expr(rule.L, lroot, rule.R, rroot, rule.r))
        )
    else:
        kroot = _single_root(rule.K)
        form = Expr(
            (
                RULE_HEAD,
                Symbol("dpo"),
                rule.L.lift(lroot),
                rule.K.lift(kroot),
                rule.R.lift(rroot),
                _pairs_expr(rule.K, kroot, rule.L, lroot, rule.l),
                _pairs_expr(rule.K, kroot, rule.R, rroot, rule.k),
            )
        )
    return format_expr(form)
