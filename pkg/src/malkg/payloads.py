"""Payload builders shared by the CLI and the HTTP service.

Both surfaces render these through the same canonical JSON serializer, so a
query answered on the command line and over HTTP produces byte-identical
documents.
"""

from __future__ import annotations

from .exports import graph_document
from .ontology import Schema
from .query import (
    PathResult,
    find_entity,
    missing_intelligence,
    similar_entities,
)
from .store import Entity, KnowledgeGraph


def node_payload(ent: Entity) -> dict:
    return {
        "id": ent.id,
        "label": ent.canonical_name,
        "class": ent.class_name,
        "aliases": sorted(ent.aliases),
    }


def search_payload(kg: KnowledgeGraph, q: str, class_name: str | None = None,
                   limit: int | None = None) -> dict:
    with kg.lock:
        matches = find_entity(kg, q, class_name, limit)
        return {
            "query": q,
            "class": class_name,
            "matches": [node_payload(ent) for ent in matches],
        }


def entity_detail_payload(kg: KnowledgeGraph, entity_id: str) -> dict:
    with kg.lock:
        ent = kg.entity(entity_id)
        touching = kg.triples_for_entity(entity_id)
        by_relation: dict[str, int] = {}
        out_degree = in_degree = 0
        reports: set[str] = set()
        for triple in touching:
            by_relation[triple.relation] = by_relation.get(triple.relation, 0) + 1
            if triple.head == entity_id:
                out_degree += 1
            if triple.tail == entity_id:
                in_degree += 1
            for prov in triple.provenance:
                if prov.method != "inference":
                    reports.add(prov.report_id)
        payload = node_payload(ent)
        payload["attributes"] = dict(sorted(ent.attributes.items()))
        payload["degree"] = {
            "out": out_degree,
            "in": in_degree,
            "by_relation": dict(sorted(by_relation.items())),
        }
        payload["reports"] = sorted(reports)
        return payload


def subgraph_payload(kg: KnowledgeGraph, subgraph) -> dict:
    with kg.lock:
        return graph_document(subgraph)


def path_payload(kg: KnowledgeGraph, start: str, goal: str,
                 result: PathResult | None) -> dict:
    with kg.lock:
        node_ids = {start, goal}
        paths = []
        if result is not None:
            paths = result.paths
            for path in paths:
                node_ids.update(path[0::2])
        return {
            "from": start,
            "to": goal,
            "length": result.length if result is not None else None,
            "paths": paths,
            "nodes": [node_payload(kg.entities[i]) for i in sorted(node_ids)
                      if i in kg.entities],
        }


def missing_payload(kg: KnowledgeGraph, schema: Schema, class_name: str) -> dict:
    with kg.lock:
        gaps = missing_intelligence(kg, schema, class_name)
        return {
            "class": class_name,
            "entities": [
                {"id": ent.id, "label": ent.canonical_name,
                 "missing": sorted(missing)}
                for ent, missing in gaps
            ],
        }


def similar_payload(kg: KnowledgeGraph, class_name: str, threshold: float,
                    generalize_tails: bool = False) -> dict:
    with kg.lock:
        result = similar_entities(kg, class_name, threshold, generalize_tails)
        return {
            "class": result.class_name,
            "threshold": result.threshold,
            "clusters": result.clusters,
            "scores": [{"a": a, "b": b, "score": score}
                       for a, b, score in result.scores],
        }


def stats_payload(kg: KnowledgeGraph) -> dict:
    with kg.lock:
        classes: dict[str, int] = {}
        for ent in kg.entities.values():
            classes[ent.class_name] = classes.get(ent.class_name, 0) + 1
        relations: dict[str, int] = {}
        asserted = inferred = 0
        for triple in kg.triples.values():
            relations[triple.relation] = relations.get(triple.relation, 0) + 1
            if triple.inferred:
                inferred += 1
            else:
                asserted += 1
        return {
            "entities": len(kg.entities),
            "triples": {
                "total": asserted + inferred,
                "asserted": asserted,
                "inferred": inferred,
            },
            "classes": dict(sorted(classes.items())),
            "relations": dict(sorted(relations.items())),
            "reports": len(kg.report_ids()),
        }


def ingest_payload(report_id: str, report) -> dict:
    return {
        "report_id": report_id,
        "new_entities": report.new_entities,
        "new_triples": report.new_triples,
        "merged": report.merged,
        "rejected": report.rejected,
        "warnings": list(report.warnings),
    }


def enrichment_payload(report) -> dict:
    return {
        "queried": report.queried,
        "found": report.found,
        "triples_added": report.triples_added,
        "errors": list(report.errors),
    }


def schema_payload(schema: Schema) -> dict:
    return {
        "version": schema.version,
        "classes": [
            {
                "name": cls.name,
                "parent": cls.parent,
                "expects": sorted(cls.expects),
            }
            for cls in sorted(schema.classes.values(), key=lambda c: c.name)
        ],
        "relations": [
            {
                "name": rel.name,
                "domain": sorted(rel.domain),
                "range": sorted(rel.range),
                "inverse_of": rel.inverse_of,
                "symmetric": rel.symmetric,
                "transitive": rel.transitive,
            }
            for rel in sorted(schema.relations.values(), key=lambda r: r.name)
        ],
    }
