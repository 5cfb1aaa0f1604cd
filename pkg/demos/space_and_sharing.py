"""Build a small space, watch sub-expressions get shared, and round-trip it through text."""

from __future__ import annotations

from mettagraph import EXPR_LABEL, Metagraph, parse


def main() -> None:
    g = Metagraph()
    r1 = g.add_expression(parse("(has Sam balloon)"))
    r2 = g.add_expression(parse("(likes Sam (has Sam balloon))"))
    print(f"two roots: {r1} and {r2}; {len(g)} edges in total")
    inner = g.edge(r2).targets[2]
    print(f"the nested (has Sam balloon) is edge {inner}, the same edge as root {r1}: {inner == r1}")

    lists = [e.id for e in g if e.label == EXPR_LABEL]
    print(f"list edges: {lists}; vertices: {[str(e.label) for e in g if e.is_vertex]}")
    print(f"edges pointing at Sam: {sorted(g.incident(g.intern(parse('Sam'))))}")

    removed = g.remove_edge(g.intern(parse("balloon")), "cascade")
    print(f"removing balloon cascades through {sorted(removed)}; {len(g)} edges left")

    text = "(= bin 0)\n(= bin 1)\n(f (g a) (g a))\n"
    h = Metagraph.load(text)
    print("dump after load is unchanged:", h.dump() == text)
    print(h.dump(), end="")


if __name__ == "__main__":
    main()
