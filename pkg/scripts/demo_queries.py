#!/usr/bin/env python3
"""Walk the analyst queries against a built demo snapshot.

Run scripts/build_demo_graph.py first, then:

    python3 scripts/demo_queries.py --snapshot demo/kg.json
"""

import argparse
from pathlib import Path

from malkg.ontology import default_schema
from malkg.query import (
    find_entity,
    missing_intelligence,
    neighborhood,
    shortest_paths,
    similar_entities,
)
from malkg.store import load_snapshot


def banner(title):
    print(f"\n== {title} ==")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--snapshot", type=Path, default=Path("demo/kg.json"))
    args = parser.parse_args()

    schema = default_schema()
    kg = load_snapshot(args.snapshot, schema)
    label = {e.id: e.canonical_name for e in kg.entities.values()}

    banner('search "chrysaor" (an alias)')
    for ent in find_entity(kg, "chrysaor"):
        aka = f" (aka {', '.join(sorted(ent.aliases))})" if ent.aliases else ""
        print(f"{ent.id}  {ent.class_name}  {ent.canonical_name}{aka}")

    pegasus = find_entity(kg, "Pegasus", class_name="Malware")[0]
    banner(f"1-hop neighborhood of {pegasus.canonical_name}")
    sub = neighborhood(kg, pegasus.id, hops=1)
    for t in sorted(sub.edges, key=lambda t: t.key):
        mark = "~" if t.inferred else "-"
        print(f"{label[t.head]} {mark}[{t.relation}]-> {label[t.tail]}")

    zitmo = find_entity(kg, "Zitmo", class_name="Malware")[0]
    banner(f"shortest paths {zitmo.canonical_name} -> {pegasus.canonical_name}")
    result = shortest_paths(kg, zitmo.id, pegasus.id)
    if result is None:
        print("unreachable")
    else:
        for path in result.paths:
            hops = path[0::2]
            rels = path[1::2]
            text = label[hops[0]]
            for rel, node in zip(rels, hops[1:]):
                text += f" -[{rel}]-> {label[node]}"
            print(text)

    banner("malware with missing expected intelligence")
    for ent, gaps in missing_intelligence(kg, schema, "Malware"):
        print(f"{ent.canonical_name}: {', '.join(sorted(gaps))}")

    banner("similar malware (jaccard >= 0.15 on outgoing edges)")
    result = similar_entities(kg, "Malware", threshold=0.15)
    for a, b, score in result.scores:
        print(f"{label[a]} ~ {label[b]}  {score:.3f}")
    for cluster in result.clusters:
        if len(cluster) > 1:
            print("cluster:", ", ".join(label[i] for i in cluster))

    banner("totals")
    inferred = sum(1 for t in kg.triples.values() if t.inferred)
    print(f"{len(kg.entities)} entities, {len(kg.triples)} triples "
          f"({inferred} inferred)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
