"""Pattern queries: unification, match, transform, conjunctions and vector similarity."""

from __future__ import annotations

from mettagraph import Metagraph, encode_vector, match, match_all, match_enriched, parse, transform, unify
from mettagraph.syntax import Enriched


def main() -> None:
    print("unify (f $x b) with (f a $y):", unify(parse("(f $x b)"), parse("(f a $y)")))

    g = Metagraph.load("(has Sam balloon)\n(has Sam ball)\n(has Ann kite)\n")
    for m in match(g, parse("(has Sam $o)")):
        print(f"root {m.matched_root} matches with {m.bindings}")
    print("transform to $o:", [str(x) for x in transform(g, parse("(has Sam $o)"), parse("$o"))])

    family = Metagraph.load("(parent Tom Bob) (parent Bob Ann) (parent Ann Joe)")
    grand = match_all(family, [parse("(parent $x $y)"), parse("(parent $y $z)")])
    print("grandparents:", [f"{c.bindings['x']} -> {c.bindings['z']}" for c in grand])

    vectors = Metagraph()
    for name, v in {"cat": [0.9, 0.1], "dog": [0.8, 0.3], "car": [-0.2, 1.0]}.items():
        vectors.add_expression(Enriched(parse(f"(word {name})"), "vector-f64", encode_vector(v)))
    query = Enriched(parse("(word $w)"), "vector-f64", encode_vector([1.0, 0.0]))
    near = match_enriched(vectors, query, "vector-f64", 0.9)
    print("words close to (1, 0):", [str(m.bindings["w"]) for m in near])


if __name__ == "__main__":
    main()
