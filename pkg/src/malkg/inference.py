"""Materializes inverse, symmetric, and transitive consequences to a fixpoint."""

from __future__ import annotations

from dataclasses import dataclass

from .ontology import Schema
from .store import KnowledgeGraph, Provenance

INFERENCE_REPORT_ID = "inference"


@dataclass(frozen=True)
class InferenceRule:
    kind: str  # inverse | symmetric | transitive
    relation: str
    inverse: str | None = None


def rules_from_schema(schema: Schema) -> list[InferenceRule]:
    rules = []
    for rel in schema.relations.values():
        if rel.symmetric:
            rules.append(InferenceRule("symmetric", rel.name))
        if rel.transitive:
            rules.append(InferenceRule("transitive", rel.name))
        if rel.inverse_of is not None:
            rules.append(InferenceRule("inverse", rel.name, inverse=rel.inverse_of))
    return rules


def materialize(kg: KnowledgeGraph, schema: Schema | None = None) -> int:
    """Add every derivable triple; returns how many were newly created.

    Confidence of a derived fact is the best over its derivations, where a
    single derivation is worth the minimum of its supports. Computed by
    monotone relaxation, so the result is order-independent.
    """
    schema = schema or kg.schema
    rules = rules_from_schema(schema)
    symmetric = {r.relation for r in rules if r.kind == "symmetric"}
    transitive = {r.relation for r in rules if r.kind == "transitive"}
    inverse = {r.relation: r.inverse for r in rules if r.kind == "inverse"}

    with kg.lock:
        best: dict[tuple[str, str, str], float] = {}
        # out[rel][a] holds every b with a known fact rel(a, b).
        out: dict[str, dict[str, set[str]]] = {}
        into: dict[str, dict[str, set[str]]] = {}

        def note(key: tuple[str, str, str], conf: float) -> bool:
            head, rel, tail = key
            if head == tail:
                return False
            if best.get(key, -1.0) >= conf:
                return False
            if key not in best:
                out.setdefault(rel, {}).setdefault(head, set()).add(tail)
                into.setdefault(rel, {}).setdefault(tail, set()).add(head)
            best[key] = conf
            return True

        work: list[tuple[str, str, str]] = []
        for triple in kg.triples.values():
            if note(triple.key, triple.confidence()):
                work.append(triple.key)

        while work:
            head, rel, tail = key = work.pop()
            conf = best[key]
            conclusions: list[tuple[tuple[str, str, str], float]] = []
            if rel in symmetric:
                conclusions.append(((tail, rel, head), conf))
            if rel in inverse:
                conclusions.append(((tail, inverse[rel], head), conf))
            if rel in transitive:
                for nxt in out.get(rel, {}).get(tail, set()):
                    conclusions.append(((head, rel, nxt), min(conf, best[(tail, rel, nxt)])))
                for prev in into.get(rel, {}).get(head, set()):
                    conclusions.append(((prev, rel, tail), min(conf, best[(prev, rel, head)])))
            for new_key, new_conf in conclusions:
                if note(new_key, new_conf):
                    work.append(new_key)

        added = 0
        for key in sorted(best):
            existing = kg.triples.get(key)
            if existing is not None:
                if existing.inferred:
                    stored = existing.confidence()
                    if best[key] > stored:
                        existing.provenance = [
                            Provenance(INFERENCE_REPORT_ID, "inference", best[key])]
                continue
            prov = Provenance(INFERENCE_REPORT_ID, "inference", best[key])
            status, _ = kg.insert_triple(key[0], key[1], key[2], prov,
                                         mode="lenient", inferred=True)
            if status == "inserted":
                added += 1
        return added


def retract_inferred(kg: KnowledgeGraph) -> int:
    """Drop every inferred triple; asserted facts are untouched."""
    with kg.lock:
        doomed = [key for key, triple in kg.triples.items() if triple.inferred]
        for key in doomed:
            kg.remove_triple(key)
        return len(doomed)
