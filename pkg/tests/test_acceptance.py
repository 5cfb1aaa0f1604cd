"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) or through pytest; in
both cases a summary line per criterion is printed.
"""

from __future__ import annotations

import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import generators as gen  # noqa: E402
import oracles  # noqa: E402

from mettagraph import (  # noqa: E402
    DPORule,
    Derivation,
    FuelExhausted,
    GluingViolation,
    Interpreter,
    Metagraph,
    Outcome,
    TypeSystem,
    apply_dpo,
    apply_spo,
    check_application,
    check_homomorphism,
    dpo_to_spo,
    find_homomorphisms,
    inherits,
    match,
    parse,
    replay_trace,
    transform,
)
from mettagraph.syntax import Expr, Grounded, Symbol, format_expr  # noqa: E402

RESULTS: dict[int, str] = {}
DUMPED_SPACES: list[Metagraph] = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)


def sym(s: str) -> Symbol:
    return Symbol(s)


def keep(g: Metagraph) -> Metagraph:
    DUMPED_SPACES.append(g)
    return g


def printable(g: Metagraph, limit: int = 20_000) -> bool:
    """Whether every root prints in under ``limit`` characters (terms built by
    duplicating rules can be exponentially large when written out)."""
    return all(not format_expr(g.lift(r), limit=limit).endswith("...") for r in g.roots)


# 1 -----------------------------------------------------------------------------


def test_criterion_1_transform_example():
    t0 = time.perf_counter()
    g = keep(Metagraph.load("(has Sam balloon)\n(has Sam ball)\n"))
    out = transform(g, parse("(has Sam $o)"), parse("$o"))
    dt = time.perf_counter() - t0
    ok = out == [sym("balloon"), sym("ball")] and dt < 1.0
    report(1, ok, f"transform -> ({' '.join(map(str, out))}) in {dt * 1000:.1f} ms")
    assert ok


# 2 -----------------------------------------------------------------------------


def test_criterion_2_nondeterministic_equality():
    t0 = time.perf_counter()
    g = keep(Metagraph.load("(= bin 0)\n(= bin 1)\n"))
    out = Interpreter(g, install_defaults=False).eval(sym("bin"))
    dt = time.perf_counter() - t0
    ok = out == [Grounded("0"), Grounded("1")] and dt < 1.0
    report(2, ok, f"eval(bin) -> {{{', '.join(map(str, out))}}} in {dt * 1000:.1f} ms")
    assert ok


# 3 -----------------------------------------------------------------------------


def test_criterion_3_function_rule():
    g = keep(Metagraph.load("(= (double $x) ($x $x))\n"))
    interp = Interpreter(g, install_defaults=False)
    first = interp.eval(parse("(double 7)"), fuel=100)
    second = interp.eval(parse("(double (double a))"), fuel=100)
    ok = first == [parse("(7 7)")] and second == [parse("((a a) (a a))")]
    report(3, ok, f"(double 7) -> {first[0] if first else None}; (double (double a)) -> {second[0] if second else None}")
    assert ok


# 4 -----------------------------------------------------------------------------


def test_criterion_4_matcher_completeness():
    rng = random.Random(4)
    n, agree, nonempty = 500, 0, 0
    t0 = time.perf_counter()
    failures = []
    for _ in range(n):
        g, pattern, var_types = gen.match_instance(rng)
        keep(g)
        got = [(m.matched_root, dict(m.bindings)) for m in match(g, pattern, var_types)]
        want = oracles.brute_force_match(g, pattern, var_types)
        if got == want:
            agree += 1
        else:
            failures.append((g.dump(), pattern, var_types, got, want))
        nonempty += bool(want)
    dt = time.perf_counter() - t0
    ok = agree == n and dt < 60.0
    report(4, ok, f"{agree}/{n} instances agree with brute force ({nonempty} non-empty) in {dt:.1f} s")
    assert ok, failures[:3]


# 5 -----------------------------------------------------------------------------


def test_criterion_5_homomorphism_oracle():
    rng = random.Random(5)
    reg = gen.registry()
    n, agree, total_maps, enriched, typed = 200, 0, 0, 0, 0
    failures = []
    for _ in range(n):
        pattern, host, facts = gen.hom_instance(rng)
        ts = TypeSystem(facts)
        got = find_homomorphisms(pattern, host, types=ts, registry=reg)
        want = oracles.brute_force_homomorphisms(pattern, host, oracles.TypeOracle(facts), reg)
        witnesses_ok = all(check_homomorphism(pattern, host, h.mapping, ts, reg) == h.witness for h in got)
        if [h.mapping for h in got] == want and witnesses_ok:
            agree += 1
        else:
            failures.append((pattern, host, [h.mapping for h in got], want))
        total_maps += len(want)
        enriched += any(e.enrichment is not None for e in pattern)
        typed += any(e.label.name.startswith("T") for e in pattern if hasattr(e.label, "name"))
    ok = agree == n
    report(5, ok, f"{agree}/{n} pairs agree ({total_maps} maps; {enriched} enriched, {typed} typed patterns)")
    assert ok, failures[:2]


# 6 -----------------------------------------------------------------------------


def _dangling_case(rng: random.Random):
    """Host with an extra edge referring to a vertex the rule deletes."""
    host = Metagraph()
    v = host.add_edge(sym("v"))
    x = host.add_edge(sym(rng.choice("xyz")))
    extra = [x, v] if rng.random() < 0.5 else [v, x]
    host.mark_root(host.add_edge(sym("link"), extra))
    L = Metagraph()
    L.add_edge(sym("v"))
    rule = DPORule(L, Metagraph(), Metagraph(), {}, {})
    return host, rule


def test_criterion_6_spo_dpo_laws():
    rng = random.Random(6)
    # (a) gluing detection
    a_cases = a_ok = violations = 0
    while a_cases < 150:
        if a_cases < 30:
            host, rule = _dangling_case(rng)
        else:
            host, rule = gen.dpo_instance(rng)
        for m in find_homomorphisms(rule.L, host):
            res = apply_dpo(host, rule, m)
            clean = oracles.gluing_oracle(host, rule.L, set(rule.l.values()), m.mapping)
            good = isinstance(res, Derivation) if clean else isinstance(res, GluingViolation)
            if a_cases < 30:
                good = good and isinstance(res, GluingViolation)
            a_ok += good
            a_cases += 1
            violations += not clean
    # (b) SPO/DPO agreement where deletions touch nothing outside the match
    b_cases = b_ok = 0
    while b_cases < 120:
        host, rule = gen.dpo_instance(rng)
        spo = dpo_to_spo(rule)
        for m in find_homomorphisms(rule.L, host):
            if not oracles.gluing_oracle(host, rule.L, set(rule.l.values()), m.mapping):
                continue
            d = apply_dpo(host, rule, m)
            s = apply_spo(host, spo, m)
            b_ok += isinstance(d, Derivation) and oracles.isomorphic(d.result, s.result)
            b_cases += 1
    # (c) SPO never fails on a valid match, and matches the set oracle
    c_cases = c_ok = 0
    while c_cases < 150:
        host, rule = gen.spo_instance(rng)
        before = host.dump(), len(host)
        for m in find_homomorphisms(rule.L, host):
            try:
                d = apply_spo(host, rule, m)
                d.result.check_invariants()
                good = oracles.canonical_content(d.result) == oracles.spo_oracle(host, rule.L, rule.R, rule.r, m.mapping)
            except Exception:  # any failure counts against the criterion
                good = False
            c_ok += good and (host.dump(), len(host)) == before
            c_cases += 1
    ok = a_ok == a_cases and b_ok == b_cases and c_ok == c_cases
    report(
        6,
        ok,
        f"(a) {a_ok}/{a_cases} gluing verdicts ({violations} violations); "
        f"(b) {b_ok}/{b_cases} SPO~DPO isomorphic; (c) {c_ok}/{c_cases} SPO applications sound",
    )
    assert ok


# 7 -----------------------------------------------------------------------------

APPLICATION_TABLE = [
    # (facts, fn, arg, expected outcome, expected result type)
    ("(: f (-> B A)) (: B Type) (: A Type) (: b B)", "f", "b", Outcome.OK, "A"),
    ("(: f (-> B A)) (: B Type) (: A Type)", "f", "u", Outcome.UNDEFINED, None),
    ("(: f (-> B A)) (: B Type) (: C Type) (: c C)", "f", "c", Outcome.ERROR, None),
    ("(: f (-> B A)) (: B Type) (: C Type) (: C B) (: c C)", "f", "c", Outcome.OK, "A"),
    ("(: f (-> B A)) (: B Type) (: C Type) (: D Type) (: D C) (: C B) (: d D)", "f", "d", Outcome.OK, "A"),
    ("(: f (-> B A)) (: B Type) (: C Type) (: B C) (: c C)", "f", "c", Outcome.ERROR, None),
    ("(: g (-> Number String))", "g", "3", Outcome.OK, "String"),
    ("(: g (-> Number String))", "g", '"s"', Outcome.ERROR, None),
    ("(: B Type) (: b B)", "h", "b", Outcome.UNDEFINED, None),
    ("(: f (-> B (-> B A))) (: B Type) (: b B)", "f", "b", Outcome.OK, "(-> B A)"),
]


def test_criterion_7_type_laws():
    rng = random.Random(7)
    graphs = laws = 0
    bad = []
    for _ in range(220):
        ts_names, facts = gen.declaration_facts(rng, rng.randint(1, 12))
        g = Metagraph()
        for a, b in facts:
            g.add_expression(Expr((sym(":"), a, b)))
        keep(g)
        oracle = oracles.TypeOracle(facts)
        fine = True
        for x in ts_names:
            fine &= inherits(g, x, x)
            for y in ts_names:
                fine &= inherits(g, x, y) == oracle.inherits(x, y)
                for z in ts_names:
                    if inherits(g, x, y) and inherits(g, y, z):
                        fine &= inherits(g, x, z)
        graphs += 1
        laws += fine
        if not fine:
            bad.append(facts)
    table_ok = 0
    for facts, fn, arg, outcome, result in APPLICATION_TABLE:
        g = Metagraph.load(facts)
        fid, aid = g.intern(parse(fn)), g.intern(parse(arg))
        res = check_application(g, fid, aid)
        table_ok += res.outcome is outcome and (result is None or res.type == parse(result))
    ok = laws == graphs and graphs >= 200 and table_ok == len(APPLICATION_TABLE)
    report(7, ok, f"{laws}/{graphs} declaration graphs closed and reflexive; table {table_ok}/{len(APPLICATION_TABLE)}")
    assert ok, bad[:2]


# 8 -----------------------------------------------------------------------------


def test_criterion_8_inhabited_rule():
    rng = random.Random(8)
    spaces = agree = checks = positives = 0
    for _ in range(120):
        g = Metagraph()
        interp = Interpreter(g)
        types = gen.type_names(rng.randint(1, 5))
        for t in types:
            g.add_expression(Expr((sym(":"), t, sym("Type"))))
        for _ in range(rng.randint(0, 6)):
            subj = rng.choice(gen.ATOMS + types)
            g.add_expression(Expr((sym(":"), subj, rng.choice(types))))
        for _ in range(rng.randint(0, 3)):
            g.add_expression(gen.ground_term(rng, 3))
        keep(g)
        fine = True
        for t in types + [sym("Nothing")]:
            want = len(transform(g, Expr((sym(":"), parse("$w"), t)), sym("True"))) > 0
            got = interp.check_inhabited(t)
            fine &= got == want
            checks += 1
            positives += want
        spaces += 1
        agree += fine
    ok = agree == spaces and spaces >= 100
    report(8, ok, f"{agree}/{spaces} spaces agree ({checks} queries, {positives} inhabited)")
    assert ok


# 9 -----------------------------------------------------------------------------


def test_criterion_9_trace_faithfulness():
    rng = random.Random(9)
    programs = faithful = steps = exhausted = 0
    failures = []
    while programs < 60:
        eqs, query = gen.program(rng, 5)
        g = Metagraph()
        for e in eqs:
            g.add_expression(e)
        interp = Interpreter(g, install_defaults=False)
        try:
            _, trace = interp.eval_traced(query, fuel=rng.randint(5, 50))
        except FuelExhausted as exc:
            trace = exc.trace
            exhausted += 1
        replays = replay_trace(trace)
        if not replays:
            continue
        if printable(trace.space):
            keep(trace.space)
        programs += 1
        steps += len(replays)
        if all(good for _, good in replays):
            faithful += 1
        else:
            failures.append((eqs, query))
    ok = faithful == programs
    report(9, ok, f"{faithful}/{programs} programs replay faithfully ({steps} equality steps, {exhausted} hit fuel)")
    assert ok, failures[:2]


# 10 ----------------------------------------------------------------------------


def test_criterion_10_determinism_and_round_trip():
    rng = random.Random(10)
    spaces = list(DUMPED_SPACES)
    # make the check self-sufficient when run on its own
    for _ in range(50):
        g, _, _ = gen.match_instance(rng)
        spaces.append(g)
    idempotent = 0
    for g in spaces:
        first = g.dump()
        second = Metagraph.load(first).dump()
        third = Metagraph.load(second).dump()
        idempotent += first == second == third
    deterministic = 0
    for _ in range(100):
        eqs, query = gen.program(rng, 5)
        outs = []
        for _ in range(3):
            g = Metagraph()
            for e in eqs:
                g.add_expression(e)
            g = Metagraph.load(g.dump())
            try:
                outs.append(("ok", Interpreter(g).eval(query, fuel=200)))
            except FuelExhausted as exc:
                outs.append(("fuel", exc.expr))
        deterministic += outs[0] == outs[1] == outs[2]
    ok = idempotent == len(spaces) and deterministic == 100
    report(10, ok, f"dump/load/dump idempotent on {idempotent}/{len(spaces)} spaces; {deterministic}/100 programs deterministic")
    assert ok


def main() -> int:
    rc = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    print()
    for n in sorted(RESULTS):
        print(RESULTS[n])
    return int(rc)


if __name__ == "__main__":
    sys.exit(main())
