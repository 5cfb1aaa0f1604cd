"""Declare types, ask which subtype relations hold, and check applications."""

from __future__ import annotations

from mettagraph import Metagraph, Outcome, check_call, inherits, parse, types_of
from mettagraph.syntax import Symbol as S

FACTS = """
(: Animal Type)
(: Dog Type)
(: Dog Animal)
(: Rex Dog)
(: EmbeddingVector Enrichment)
(: KPCAVector EmbeddingVector)
(: BobV KPCAVector)
(: feed (-> Animal Number))
"""


def main() -> None:
    g = Metagraph.load(FACTS)
    print("Dog <: Animal:", inherits(g, S("Dog"), S("Animal")))
    print("Rex <: Dog (membership is not subtyping):", inherits(g, S("Rex"), S("Dog")))
    print("KPCAVector <: EmbeddingVector:", inherits(g, S("KPCAVector"), S("EmbeddingVector")))
    print("types of Rex:", [str(t) for t in types_of(g, g.intern(S("Rex")))])

    for arg in ("Rex", "BobV", "Nobody", "3"):
        res = check_call(g, S("feed"), [parse(arg)])
        detail = f" -> {res.type}" if res.outcome is Outcome.OK else ""
        print(f"(feed {arg}): {res.outcome.name}{detail}")


if __name__ == "__main__":
    main()
