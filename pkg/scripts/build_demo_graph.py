#!/usr/bin/env python3
"""Build a ready-to-serve demo workspace from the bundled fixtures.

Ingests the synthetic three-report corpus, enriches hashes from the offline
reputation fixtures, materializes inference, and writes a snapshot plus all
three export formats. The emitted config file makes the workspace usable
directly:

    python3 scripts/build_demo_graph.py --out demo
    malkg -c demo/malkg.yaml serve
"""

import argparse
import sys
from pathlib import Path

from malkg.brat import load_corpus
from malkg.enrichment import ReputationSource, enrich
from malkg.exports import export_dot, export_graph_document, export_ntriples
from malkg.feed import write_snapshot_atomic
from malkg.inference import materialize
from malkg.ontology import default_schema
from malkg.store import KnowledgeGraph

REPO = Path(__file__).resolve().parents[1]
FIXTURES = REPO / "tests" / "fixtures"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("demo"),
                        help="workspace directory to create (default: demo)")
    parser.add_argument("--skip-enrich", action="store_true",
                        help="leave hashes unenriched")
    args = parser.parse_args()
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    schema = default_schema()
    kg = KnowledgeGraph(schema)

    results, stats = load_corpus(FIXTURES / "corpus", schema)
    if stats.errors:
        for line in stats.errors:
            print(f"corpus error: {line}", file=sys.stderr)
        return 1
    for doc, triples in results:
        kg.ingest_document(doc.doc_id, triples)
    print(f"ingested {stats.documents} reports: "
          f"{len(kg.entities)} entities, {len(kg.triples)} triples")

    if not args.skip_enrich:
        report = enrich(kg, schema, ReputationSource(
            fixture_dir=FIXTURES / "reputation"))
        print(f"enriched {report.found}/{report.queried} hashes, "
              f"+{report.triples_added} triples")

    inferred = materialize(kg, schema)
    print(f"materialized {inferred} inferred triples")

    write_snapshot_atomic(kg, out / "kg.json")
    (out / "kg.nt").write_text(export_ntriples(kg), encoding="utf-8")
    (out / "kg-graph.json").write_text(export_graph_document(kg),
                                       encoding="utf-8")
    (out / "kg.dot").write_text(export_dot(kg), encoding="utf-8")
    (out / "malkg.yaml").write_text(
        "snapshot_path: kg.json\n"
        f"fixture_dir: {FIXTURES / 'reputation'}\n"
        f"feed_manifest: {FIXTURES / 'feed' / 'manifest.tsv'}\n"
        "state_dir: state\n",
        encoding="utf-8")
    print(f"wrote snapshot and exports under {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
