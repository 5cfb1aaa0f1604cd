"""Find structure-preserving maps from a small pattern metagraph into a host."""

from __future__ import annotations

import numpy as np

from mettagraph import (
    EnrichmentRegistry,
    Metagraph,
    SmallestCandidateSet,
    TypeSystem,
    encode_vector,
    find_homomorphisms,
    linear_map_kind,
)
from mettagraph.metagraph import Enrichment
from mettagraph.syntax import Symbol as S
from mettagraph.syntax import Variable as V


def main() -> None:
    host = Metagraph()
    rex, tom, bone = host.add_edge(S("Rex")), host.add_edge(S("Tom")), host.add_edge(S("bone"))
    host.add_edge(S("chews"), [rex, tom, bone])

    pattern = Metagraph()
    who = pattern.add_edge(S("Animal"))
    what = pattern.add_edge(V("thing"))
    pattern.add_edge(S("chews"), [who, what])

    types = TypeSystem([(S("Animal"), S("Type")), (S("Dog"), S("Type")), (S("Rex"), S("Type")), (S("Rex"), S("Animal"))])
    for h in find_homomorphisms(pattern, host, types=types, heuristic=SmallestCandidateSet()):
        print("Animal ->", host.edge(h[who]).label, "; $thing ->", host.edge(h[what]).label)

    lin = EnrichmentRegistry([linear_map_kind("plane", {"rotate": np.array([[0, -1], [1, 0]])})])
    p, q = Metagraph(), Metagraph()
    p.add_edge(S("arrow"), enrichment=Enrichment("plane", encode_vector([1, 0])))
    q.add_edge(S("arrow"), enrichment=Enrichment("plane", encode_vector([0, 1])))
    [h] = find_homomorphisms(p, q, registry=lin)
    print("enriched map uses witness:", h.witness)


if __name__ == "__main__":
    main()
