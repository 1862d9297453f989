"""BRAT standoff parsing and conversion of annotations into candidate triples."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Mapping

from .errors import BratParseError, MalkgError, SchemaError, UnpairedFileError
from .ontology import Schema
from .store import CandidateEntity, CandidateTriple, Provenance


@dataclass(frozen=True)
class EntitySpan:
    ann_id: str
    tag: str
    spans: tuple[tuple[int, int], ...]
    surface: str


@dataclass(frozen=True)
class RelationAnn:
    ann_id: str
    tag: str
    arg1: str
    arg2: str


@dataclass
class AnnotatedDocument:
    doc_id: str
    text: str
    entities: list[EntitySpan]
    relations: list[RelationAnn]
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class TagMap:
    """Annotation tag names mapped onto schema class and relation names."""

    entity_tags: Mapping[str, str]
    relation_tags: Mapping[str, str]

    @classmethod
    def identity(cls, schema: Schema) -> "TagMap":
        return cls(entity_tags={c: c for c in schema.classes},
                   relation_tags={r: r for r in schema.relations})

    def validate(self, schema: Schema) -> None:
        for tag, target in self.entity_tags.items():
            if not schema.has_class(target):
                raise SchemaError(f"tag {tag!r} maps to unknown class {target!r}")
        for tag, target in self.relation_tags.items():
            if not schema.has_relation(target):
                raise SchemaError(f"tag {tag!r} maps to unknown relation {target!r}")


def _parse_spans(fragment_text: str, line_no: int, line: str) -> tuple[tuple[int, int], ...]:
    spans = []
    for fragment in fragment_text.split(";"):
        parts = fragment.split()
        if len(parts) != 2:
            raise BratParseError(f"bad span fragment {fragment!r}", line_no, line)
        try:
            start, end = int(parts[0]), int(parts[1])
        except ValueError:
            raise BratParseError(f"non-integer offset in {fragment!r}", line_no, line) from None
        if start >= end:
            raise BratParseError(f"empty or inverted span {start}..{end}", line_no, line)
        spans.append((start, end))
    for (_, prev_end), (next_start, _) in zip(spans, spans[1:]):
        if next_start < prev_end:
            raise BratParseError("span fragments overlap or are out of order", line_no, line)
    return tuple(spans)


def parse_standoff(ann_text: str, doc_text: str, doc_id: str) -> AnnotatedDocument:
    """Parse one .ann file against its report text.

    Offsets are Unicode code points. Attribute (`A`), note (`#`) and
    equivalence (`*`) lines are skipped with a warning; anything else
    unrecognized is an error.
    """
    entities: dict[str, EntitySpan] = {}
    relations: list[tuple[int, str, RelationAnn]] = []
    warnings: list[str] = []
    for line_no, line in enumerate(ann_text.splitlines(), 1):
        if not line.strip():
            continue
        kind = line[0]
        if kind in ("A", "#", "*"):
            warnings.append(f"{doc_id} line {line_no}: skipped {kind!r} annotation")
            continue
        fields = line.split("\t")
        if kind == "T":
            if len(fields) != 3:
                raise BratParseError("entity line needs 3 tab-separated fields", line_no, line)
            ann_id, middle, surface = fields
            if ann_id in entities:
                raise BratParseError(f"duplicate annotation id {ann_id}", line_no, line)
            tag, _, span_text = middle.partition(" ")
            if not tag or not span_text:
                raise BratParseError("entity line needs a tag and offsets", line_no, line)
            spans = _parse_spans(span_text, line_no, line)
            if spans[-1][1] > len(doc_text):
                raise BratParseError(
                    f"offset {spans[-1][1]} beyond document end {len(doc_text)}", line_no, line)
            expected = " ".join(doc_text[s:e] for s, e in spans)
            if surface != expected:
                raise BratParseError(
                    f"surface {surface!r} does not match document text {expected!r}",
                    line_no, line)
            entities[ann_id] = EntitySpan(ann_id, tag, spans, surface)
        elif kind == "R":
            if len(fields) != 2:
                raise BratParseError("relation line needs 2 tab-separated fields", line_no, line)
            ann_id, middle = fields
            parts = middle.split()
            if len(parts) != 3 or not parts[1].startswith("Arg1:") \
                    or not parts[2].startswith("Arg2:"):
                raise BratParseError("relation line needs `Tag Arg1:Tx Arg2:Ty`", line_no, line)
            arg1 = parts[1][len("Arg1:"):]
            arg2 = parts[2][len("Arg2:"):]
            if arg1 == arg2:
                raise BratParseError("relation arguments must differ", line_no, line)
            relations.append((line_no, line, RelationAnn(ann_id, parts[0], arg1, arg2)))
        else:
            raise BratParseError(f"unrecognized annotation kind {kind!r}", line_no, line)
    for line_no, line, rel in relations:
        for arg in (rel.arg1, rel.arg2):
            if arg not in entities:
                raise BratParseError(f"relation references missing entity {arg}", line_no, line)
    return AnnotatedDocument(
        doc_id=doc_id,
        text=doc_text,
        entities=list(entities.values()),
        relations=[rel for _, _, rel in relations],
        warnings=warnings,
    )


def to_triples(doc: AnnotatedDocument, schema: Schema, tag_map: TagMap,
               mode: str = "lenient") -> tuple[list[CandidateTriple], list[str]]:
    """Turn relation annotations into candidate triples with provenance.

    Unmapped tags warn; in strict mode a domain/range violation drops the
    triple with a warning, in lenient mode it is kept flagged.
    """
    tag_map.validate(schema)
    warnings: list[str] = []
    mapped: dict[str, CandidateEntity] = {}
    for span in doc.entities:
        class_name = tag_map.entity_tags.get(span.tag)
        if class_name is None:
            warnings.append(f"{doc.doc_id} {span.ann_id}: unmapped entity tag {span.tag!r}")
            continue
        mapped[span.ann_id] = CandidateEntity(class_name=class_name, name=span.surface)
    triples: list[CandidateTriple] = []
    for rel in doc.relations:
        relation = tag_map.relation_tags.get(rel.tag)
        if relation is None:
            warnings.append(f"{doc.doc_id} {rel.ann_id}: unmapped relation tag {rel.tag!r}")
            continue
        head = mapped.get(rel.arg1)
        tail = mapped.get(rel.arg2)
        if head is None or tail is None:
            # The unmapped endpoint already produced its own warning.
            continue
        violation = schema.validate_triple_types(head.class_name, relation, tail.class_name)
        if violation is not None and mode == "strict":
            warnings.append(f"{doc.doc_id} {rel.ann_id}: dropped, {violation}")
            continue
        triples.append(CandidateTriple(
            head=head, relation=relation, tail=tail,
            provenance=Provenance(report_id=doc.doc_id, method="annotation", confidence=1.0),
            violation=violation,
        ))
    return triples, warnings


@dataclass
class CorpusStats:
    documents: int = 0
    entity_spans: int = 0
    relation_annotations: int = 0
    candidate_triples: int = 0
    warnings: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def tags(self) -> int:
        return self.entity_spans + self.relation_annotations


def load_corpus(directory, schema: Schema, tag_map: TagMap | None = None,
                mode: str = "lenient") -> tuple[list[tuple[AnnotatedDocument, list[CandidateTriple]]], CorpusStats]:
    """Load every paired .txt/.ann under directory, ordered by filename.

    Per-file failures (unpaired or malformed files) are collected in
    stats.errors without aborting the remaining documents.
    """
    if tag_map is None:
        tag_map = TagMap.identity(schema)
    names = sorted(os.listdir(directory))
    txt_stems = {n[:-4] for n in names if n.endswith(".txt")}
    ann_stems = {n[:-4] for n in names if n.endswith(".ann")}
    results: list[tuple[AnnotatedDocument, list[CandidateTriple]]] = []
    stats = CorpusStats()
    for stem in sorted(txt_stems | ann_stems):
        if stem not in ann_stems:
            stats.errors.append(str(UnpairedFileError(f"{stem}.txt has no matching .ann file")))
            continue
        if stem not in txt_stems:
            stats.errors.append(str(UnpairedFileError(f"{stem}.ann has no matching .txt file")))
            continue
        txt_path = os.path.join(directory, stem + ".txt")
        ann_path = os.path.join(directory, stem + ".ann")
        with open(txt_path, encoding="utf-8") as fh:
            doc_text = fh.read()
        with open(ann_path, encoding="utf-8") as fh:
            ann_text = fh.read()
        try:
            doc = parse_standoff(ann_text, doc_text, doc_id=stem)
            triples, warnings = to_triples(doc, schema, tag_map, mode=mode)
        except MalkgError as exc:
            stats.errors.append(f"{stem}: {exc}")
            continue
        results.append((doc, triples))
        stats.documents += 1
        stats.entity_spans += len(doc.entities)
        stats.relation_annotations += len(doc.relations)
        stats.candidate_triples += len(triples)
        stats.warnings.extend(doc.warnings)
        stats.warnings.extend(warnings)
    return results, stats
