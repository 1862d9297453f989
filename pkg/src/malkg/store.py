"""Alias-aware knowledge graph store with provenance-tracked triples."""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Mapping

from .errors import (
    AliasConflictError,
    CorruptSnapshotError,
    MalkgError,
    SelfLoopError,
    SnapshotVersionError,
    StoreError,
    UnknownClassError,
    UnknownEntityError,
    UnknownRelationError,
)
from .ontology import Schema, default_schema

SNAPSHOT_FORMAT_VERSION = 1
METHODS = ("annotation", "rule", "enrichment", "inference")
ALIAS_RELATION = "hasAlias"
# Pseudo report id for hasAlias edges materialized by alias registration.
ALIAS_REPORT_ID = "alias-registration"


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class Provenance:
    """One record of where a triple came from and how much to trust it."""

    report_id: str
    method: str
    confidence: float
    timestamp: datetime = field(default_factory=utcnow)

    def __post_init__(self):
        if self.method not in METHODS:
            raise StoreError(f"unknown provenance method {self.method!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise StoreError(f"confidence {self.confidence} outside [0, 1]")
        if self.method == "annotation" and self.confidence != 1.0:
            raise StoreError("annotation provenance must carry confidence 1.0")
        if self.timestamp.tzinfo is None:
            object.__setattr__(self, "timestamp", self.timestamp.replace(tzinfo=timezone.utc))


@dataclass
class Entity:
    id: str
    class_name: str
    canonical_name: str
    aliases: set[str] = field(default_factory=set)
    attributes: dict[str, str] = field(default_factory=dict)

    def names(self) -> set[str]:
        return {self.canonical_name, *self.aliases}


@dataclass
class Triple:
    head: str
    relation: str
    tail: str
    inferred: bool = False
    violation: str | None = None
    provenance: list[Provenance] = field(default_factory=list)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.head, self.relation, self.tail)

    def confidence(self) -> float:
        return max(p.confidence for p in self.provenance)


@dataclass(frozen=True)
class CandidateEntity:
    """An entity mention not yet resolved against the store."""

    class_name: str
    name: str
    attributes: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class CandidateTriple:
    head: CandidateEntity
    relation: str
    tail: CandidateEntity
    provenance: Provenance
    violation: str | None = None


@dataclass
class IngestReport:
    new_entities: int = 0
    new_triples: int = 0
    merged: int = 0
    rejected: int = 0
    warnings: list[str] = field(default_factory=list)

    def is_noop(self) -> bool:
        return not (self.new_entities or self.new_triples or self.merged or self.rejected)


class KnowledgeGraph:
    """Entity registry plus triple set, with indexes kept coherent.

    Mutations are serialized through an internal lock (single writer);
    readers that need a stable multi-step view can hold the same lock.
    """

    def __init__(self, schema: Schema | None = None):
        self.schema = schema if schema is not None else default_schema()
        self.lock = threading.RLock()
        self.entities: dict[str, Entity] = {}
        self.triples: dict[tuple[str, str, str], Triple] = {}
        self._by_head: dict[str, set[tuple[str, str, str]]] = {}
        self._by_tail: dict[str, set[tuple[str, str, str]]] = {}
        self._by_relation: dict[str, set[tuple[str, str, str]]] = {}
        self._by_report: dict[str, set[tuple[str, str, str]]] = {}
        self._name_index: dict[str, set[str]] = {}
        self._ingested_reports: set[str] = set()
        self._id_counter = 0

    # -- entities ---------------------------------------------------------

    def _fresh_id(self) -> str:
        self._id_counter += 1
        return f"e{self._id_counter:06d}"

    def _index_name(self, name: str, entity_id: str) -> None:
        self._name_index.setdefault(name.casefold(), set()).add(entity_id)

    def entity(self, entity_id: str) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise UnknownEntityError(f"no entity with id {entity_id!r}") from None

    def entities_by_name(self, name: str, class_name: str | None = None) -> list[Entity]:
        ids = self._name_index.get(name.strip().casefold(), set())
        found = [self.entities[i] for i in sorted(ids)]
        if class_name is not None:
            found = [e for e in found if e.class_name == class_name]
        return found

    def upsert_entity(self, class_name: str, name: str,
                      attributes: Mapping[str, str] | None = None) -> tuple[Entity, bool]:
        if not self.schema.has_class(class_name):
            raise UnknownClassError(f"unknown class {class_name!r}")
        name = name.strip()
        if not name:
            raise StoreError("entity name must be nonempty")
        with self.lock:
            for ent in self.entities_by_name(name, class_name):
                if attributes:
                    ent.attributes.update(attributes)
                return ent, False
            ent = Entity(id=self._fresh_id(), class_name=class_name, canonical_name=name,
                         attributes=dict(attributes or {}))
            self.entities[ent.id] = ent
            self._index_name(name, ent.id)
            return ent, True

    def alias_cluster(self, entity_id: str) -> set[str]:
        """Ids of entities reachable through alias links, same class only."""
        start = self.entity(entity_id)
        seen = {entity_id}
        frontier = [start]
        while frontier:
            ent = frontier.pop()
            linked: set[str] = set()
            for key in self._by_head.get(ent.id, set()) | self._by_tail.get(ent.id, set()):
                if key[1] != ALIAS_RELATION:
                    continue
                other = key[2] if key[0] == ent.id else key[0]
                linked.add(other)
            for name in ent.names():
                linked |= self._name_index.get(name.casefold(), set())
            for other_id in linked:
                other = self.entities[other_id]
                if other_id not in seen and other.class_name == start.class_name:
                    seen.add(other_id)
                    frontier.append(other)
        return seen

    def _register_alias(self, ent: Entity, alias: str) -> bool:
        """Record alias on ent without conflict checks; True if newly added."""
        if alias.casefold() == ent.canonical_name.casefold():
            return False
        if any(alias.casefold() == a.casefold() for a in ent.aliases):
            return False
        ent.aliases.add(alias)
        self._index_name(alias, ent.id)
        return True

    def add_alias(self, entity_id: str, alias: str) -> Entity:
        ent = self.entity(entity_id)
        alias = alias.strip()
        if not alias:
            raise StoreError("alias must be nonempty")
        with self.lock:
            holders = [e for e in self.entities_by_name(alias, ent.class_name)
                       if e.id != ent.id and e.canonical_name.casefold() == alias.casefold()]
            if holders:
                cluster = self.alias_cluster(entity_id)
                strangers = [e for e in holders if e.id not in cluster]
                if strangers:
                    raise AliasConflictError(
                        f"{alias!r} is already the canonical name of "
                        f"{strangers[0].class_name} entity {strangers[0].id}")
            self._register_alias(ent, alias)
            for other in holders:
                if (ent.id, ALIAS_RELATION, other.id) in self.triples:
                    continue
                if (other.id, ALIAS_RELATION, ent.id) in self.triples:
                    continue
                if self.schema.has_relation(ALIAS_RELATION):
                    prov = Provenance(ALIAS_REPORT_ID, "rule", 1.0)
                    self.insert_triple(ent.id, ALIAS_RELATION, other.id, prov, mode="lenient")
            return ent

    # -- triples ----------------------------------------------------------

    def _index_triple(self, triple: Triple) -> None:
        key = triple.key
        self._by_head.setdefault(triple.head, set()).add(key)
        self._by_tail.setdefault(triple.tail, set()).add(key)
        self._by_relation.setdefault(triple.relation, set()).add(key)
        for prov in triple.provenance:
            self._by_report.setdefault(prov.report_id, set()).add(key)

    def insert_triple(self, head: str, relation: str, tail: str, prov: Provenance,
                      mode: str = "lenient", inferred: bool = False) -> tuple[str, str | None]:
        """Insert or merge one triple; returns (status, reason).

        status is one of inserted, merged, rejected; rejected only occurs for
        type violations in strict mode and carries the violation message.
        """
        head_ent = self.entity(head)
        tail_ent = self.entity(tail)
        if not self.schema.has_relation(relation):
            raise UnknownRelationError(f"unknown relation {relation!r}")
        if head == tail:
            raise SelfLoopError(f"self-loop on {head} via {relation}")
        violation = self.schema.validate_triple_types(
            head_ent.class_name, relation, tail_ent.class_name)
        if violation is not None and mode == "strict":
            return "rejected", violation
        with self.lock:
            key = (head, relation, tail)
            existing = self.triples.get(key)
            if existing is not None:
                seen = {(p.report_id, p.method) for p in existing.provenance}
                if (prov.report_id, prov.method) not in seen:
                    existing.provenance.append(prov)
                    self._by_report.setdefault(prov.report_id, set()).add(key)
                if existing.inferred and not inferred:
                    existing.inferred = False
                return "merged", None
            triple = Triple(head, relation, tail, inferred=inferred,
                            violation=violation, provenance=[prov])
            self.triples[key] = triple
            self._index_triple(triple)
            return "inserted", None

    def remove_triple(self, key: tuple[str, str, str]) -> None:
        triple = self.triples.pop(key, None)
        if triple is None:
            return
        self._by_head[triple.head].discard(key)
        self._by_tail[triple.tail].discard(key)
        self._by_relation[triple.relation].discard(key)
        for prov in triple.provenance:
            self._by_report.get(prov.report_id, set()).discard(key)

    def outgoing_triples(self, entity_id: str) -> list[Triple]:
        return [self.triples[k] for k in sorted(self._by_head.get(entity_id, set()))]

    def triples_for_entity(self, entity_id: str) -> list[Triple]:
        keys = self._by_head.get(entity_id, set()) | self._by_tail.get(entity_id, set())
        return [self.triples[k] for k in sorted(keys)]

    def triples_for_report(self, report_id: str) -> list[Triple]:
        return [self.triples[k] for k in sorted(self._by_report.get(report_id, set()))]

    def iter_triples(self, include_inferred: bool = True) -> Iterator[Triple]:
        for key in sorted(self.triples):
            triple = self.triples[key]
            if triple.inferred and not include_inferred:
                continue
            yield triple

    def report_ids(self) -> list[str]:
        """Report ids that contributed asserted facts (annotation or rule)."""
        seen = set()
        for triple in self.triples.values():
            for prov in triple.provenance:
                if prov.method in ("annotation", "rule") and prov.report_id != ALIAS_REPORT_ID:
                    seen.add(prov.report_id)
        return sorted(seen)

    # -- ingestion --------------------------------------------------------

    def ingest_document(self, report_id: str, candidates: Iterable[CandidateTriple],
                        entities: Iterable[CandidateEntity] = (),
                        mode: str = "lenient") -> IngestReport:
        report = IngestReport()
        with self.lock:
            if report_id in self._ingested_reports or report_id in self._by_report:
                report.warnings.append(f"report {report_id!r} already ingested; skipped")
                return report
            for cand in entities:
                try:
                    _, created = self.upsert_entity(cand.class_name, cand.name, cand.attributes)
                except MalkgError as exc:
                    report.warnings.append(f"entity {cand.name!r}: {exc}")
                    continue
                if created:
                    report.new_entities += 1
            for cand in candidates:
                try:
                    head, head_new = self.upsert_entity(
                        cand.head.class_name, cand.head.name, cand.head.attributes)
                    if head_new:
                        report.new_entities += 1
                    tail, tail_new = self.upsert_entity(
                        cand.tail.class_name, cand.tail.name, cand.tail.attributes)
                    if tail_new:
                        report.new_entities += 1
                    status, reason = self.insert_triple(
                        head.id, cand.relation, tail.id, cand.provenance, mode=mode)
                except MalkgError as exc:
                    report.rejected += 1
                    report.warnings.append(
                        f"{cand.head.name!r} -{cand.relation}-> {cand.tail.name!r}: {exc}")
                    continue
                if status == "inserted":
                    report.new_triples += 1
                elif status == "merged":
                    report.merged += 1
                else:
                    report.rejected += 1
                    report.warnings.append(
                        f"{cand.head.name!r} -{cand.relation}-> {cand.tail.name!r}: {reason}")
                if status != "rejected" and cand.relation == ALIAS_RELATION \
                        and head.class_name == tail.class_name:
                    self._register_alias(head, tail.canonical_name)
                    self._register_alias(tail, head.canonical_name)
            self._ingested_reports.add(report_id)
        return report

    # -- persistence ------------------------------------------------------

    def _body(self) -> dict:
        entities = []
        for ent_id in sorted(self.entities):
            ent = self.entities[ent_id]
            entities.append({
                "id": ent.id,
                "class": ent.class_name,
                "name": ent.canonical_name,
                "aliases": sorted(ent.aliases),
                "attributes": dict(sorted(ent.attributes.items())),
            })
        triples = []
        for key in sorted(self.triples):
            triple = self.triples[key]
            triples.append({
                "head": triple.head,
                "relation": triple.relation,
                "tail": triple.tail,
                "inferred": triple.inferred,
                "violation": triple.violation,
                "provenance": [{
                    "report_id": p.report_id,
                    "method": p.method,
                    "confidence": p.confidence,
                    "timestamp": p.timestamp.isoformat(),
                } for p in triple.provenance],
            })
        return {
            "entities": entities,
            "triples": triples,
            "ingested_reports": sorted(self._ingested_reports),
        }

    def snapshot_document(self) -> str:
        with self.lock:
            body = self._body()
        checksum = hashlib.sha256(_canonical(body).encode("utf-8")).hexdigest()
        doc = {
            "format_version": SNAPSHOT_FORMAT_VERSION,
            "schema_version": self.schema.version,
            "checksum": checksum,
            "body": body,
        }
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def save_snapshot(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.snapshot_document())

    def __eq__(self, other) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return (self.schema.version == other.schema.version
                and self._body() == other._body())

    def check_consistency(self) -> list[str]:
        """Index coherence audit; returns one message per problem found."""
        problems = []
        for key, triple in self.triples.items():
            if key != triple.key:
                problems.append(f"triple keyed {key} holds {triple.key}")
            for ent_id in (triple.head, triple.tail):
                if ent_id not in self.entities:
                    problems.append(f"triple {key} references missing entity {ent_id}")
            if not triple.provenance:
                problems.append(f"triple {key} has empty provenance")
            if key not in self._by_head.get(triple.head, set()):
                problems.append(f"triple {key} missing from head index")
            if key not in self._by_tail.get(triple.tail, set()):
                problems.append(f"triple {key} missing from tail index")
            if key not in self._by_relation.get(triple.relation, set()):
                problems.append(f"triple {key} missing from relation index")
            for prov in triple.provenance:
                if key not in self._by_report.get(prov.report_id, set()):
                    problems.append(f"triple {key} missing from report index {prov.report_id}")
        for bucket_name, index in (("head", self._by_head), ("tail", self._by_tail),
                                   ("relation", self._by_relation), ("report", self._by_report)):
            for value, keys in index.items():
                for key in keys:
                    if key not in self.triples:
                        problems.append(f"{bucket_name} index {value!r} lists stale {key}")
        for name, ids in self._name_index.items():
            for ent_id in ids:
                ent = self.entities.get(ent_id)
                if ent is None:
                    problems.append(f"name index {name!r} lists missing entity {ent_id}")
                elif name not in {n.casefold() for n in ent.names()}:
                    problems.append(f"name index {name!r} lists non-holder {ent_id}")
        for ent in self.entities.values():
            for name in ent.names():
                if ent.id not in self._name_index.get(name.casefold(), set()):
                    problems.append(f"entity {ent.id} name {name!r} not indexed")
            if any(a.casefold() == ent.canonical_name.casefold() for a in ent.aliases):
                problems.append(f"entity {ent.id} aliases its own canonical name")
        return problems


def _canonical(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def load_snapshot(path, schema: Schema | None = None) -> KnowledgeGraph:
    with open(path, encoding="utf-8") as fh:
        raw = fh.read()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorruptSnapshotError(f"snapshot is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "body" not in doc:
        raise CorruptSnapshotError("snapshot missing body")
    if doc.get("format_version") != SNAPSHOT_FORMAT_VERSION:
        raise SnapshotVersionError(
            f"snapshot format {doc.get('format_version')!r}, "
            f"expected {SNAPSHOT_FORMAT_VERSION}")
    body = doc["body"]
    checksum = hashlib.sha256(_canonical(body).encode("utf-8")).hexdigest()
    if checksum != doc.get("checksum"):
        raise CorruptSnapshotError("snapshot checksum mismatch")
    kg = KnowledgeGraph(schema)
    if doc.get("schema_version") != kg.schema.version:
        raise SnapshotVersionError(
            f"snapshot was written for schema {doc.get('schema_version')!r}, "
            f"active schema is {kg.schema.version!r}")
    try:
        max_num = 0
        for row in body["entities"]:
            ent = Entity(id=row["id"], class_name=row["class"], canonical_name=row["name"],
                         aliases=set(row["aliases"]), attributes=dict(row["attributes"]))
            kg.entities[ent.id] = ent
            for name in ent.names():
                kg._index_name(name, ent.id)
            if ent.id.startswith("e") and ent.id[1:].isdigit():
                max_num = max(max_num, int(ent.id[1:]))
        kg._id_counter = max_num
        for row in body["triples"]:
            provenance = [Provenance(p["report_id"], p["method"], p["confidence"],
                                     datetime.fromisoformat(p["timestamp"]))
                          for p in row["provenance"]]
            triple = Triple(row["head"], row["relation"], row["tail"],
                            inferred=row["inferred"], violation=row["violation"],
                            provenance=provenance)
            kg.triples[triple.key] = triple
            kg._index_triple(triple)
        kg._ingested_reports = set(body["ingested_reports"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptSnapshotError(f"snapshot body malformed: {exc}") from exc
    return kg
