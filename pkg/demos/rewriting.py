"""Single- and double-pushout rewriting, and where the two disagree."""

from __future__ import annotations

from mettagraph import DPORule, Metagraph, SPORule, apply_dpo, apply_spo, derive_all, find_homomorphisms, parse_rules
from mettagraph.syntax import Symbol as S

RULES = """
; swap the arguments of f
(!rule spo (f $x $y) (f $y $x) (((1) (2)) ((2) (1))))
"""


def main() -> None:
    [swap] = parse_rules(RULES)
    host = Metagraph.load("(f a b)\n(g c)\n")
    for d in derive_all(host, swap):
        print("swap:", [str(e) for e in d.result.root_expressions()])

    host = Metagraph.load("(x v)")
    L = Metagraph()
    L.add_edge(S("v"))
    [m] = find_homomorphisms(L, host)
    spo = apply_spo(host, SPORule(L, Metagraph(), {}), m)
    print("SPO deletes v and the edge that used it:", sorted(spo.deleted), "->", [str(e.label) for e in spo.result])
    dpo = apply_dpo(host, DPORule(L, Metagraph(), Metagraph(), {}, {}), m)
    print("DPO refuses:", dpo.reason, "edges", sorted(dpo.edges))
    print("host untouched:", host.dump().strip())


if __name__ == "__main__":
    main()
