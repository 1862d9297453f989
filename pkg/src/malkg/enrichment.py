"""Hash reputation enrichment.

Looks up file hashes against a reputation source (offline fixture directory
or a live HTTP endpoint) and folds the returned facts into the graph:
first-seen dates become Date nodes, detection labels become Label nodes,
and the file type is kept as an attribute on the hash entity itself.
"""

from __future__ import annotations

import datetime
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import requests
import yaml

from .errors import (
    EnrichmentError,
    InvalidHashError,
    ReputationAuthError,
    ReputationRateLimitError,
    ReputationResponseError,
)
from .ontology import Schema
from .store import Entity, KnowledgeGraph, Provenance

HASH_KINDS = {32: "md5", 40: "sha1", 64: "sha256"}

DEFAULT_SOURCE_ID = "virustotal-fixture"
DEFAULT_FIELD_MAP = {
    "first_seen": "first_seen",
    "labels": "labels",
    "file_type": "file_type",
}
CREDENTIAL_HEADER = "x-apikey"
REQUEST_TIMEOUT = 15.0

# longest Retry-After we will sit out in-process before giving up
_RETRY_CAP = 30.0

_HEX = re.compile(r"[0-9a-f]+\Z")
_DATE = re.compile(r"\d{4}-\d{2}(-\d{2})?\Z")


def normalize_hash(text: str) -> tuple[str, str]:
    """Return (lowercase digest, kind) or raise InvalidHashError."""
    digest = text.strip().lower()
    kind = HASH_KINDS.get(len(digest))
    if kind is None or not _HEX.match(digest):
        raise InvalidHashError(f"not a valid md5/sha1/sha256 hex digest: {text!r}")
    return digest, kind


def _validate_first_seen(text: str) -> None:
    if not _DATE.match(text):
        raise ReputationResponseError(
            f"invalid first_seen date {text!r}: expected YYYY-MM or YYYY-MM-DD")
    parts = [int(p) for p in text.split("-")]
    if len(parts) == 2:
        if not 1 <= parts[1] <= 12:
            raise ReputationResponseError(f"invalid first_seen date {text!r}")
    else:
        try:
            datetime.date(*parts)
        except ValueError:
            raise ReputationResponseError(f"invalid first_seen date {text!r}") from None


@dataclass(frozen=True)
class FactRecord:
    """One reputation lookup result for a file hash."""

    hash: str
    hash_kind: str
    first_seen: str
    labels: frozenset[str] = frozenset()
    file_type: str | None = None

    def __post_init__(self):
        kind = HASH_KINDS.get(len(self.hash))
        if kind is None or not _HEX.match(self.hash):
            raise InvalidHashError(
                f"not a valid md5/sha1/sha256 hex digest: {self.hash!r}")
        if kind != self.hash_kind:
            raise InvalidHashError(
                f"hash kind {self.hash_kind!r} does not match a digest of "
                f"length {len(self.hash)}")
        _validate_first_seen(self.first_seen)
        object.__setattr__(self, "labels", frozenset(self.labels))


@dataclass(frozen=True)
class ReputationSource:
    """Where reputation facts come from.

    mode=fixture reads one YAML record per hash from fixture_dir (files are
    named by the bare lowercase digest).  mode=live issues authenticated GETs
    to endpoint/<digest>; credential_env names the environment variable that
    holds the API key, and field_map translates response keys to FactRecord
    fields so differently shaped vendors can be wired in from config.
    """

    mode: str = "fixture"
    source_id: str = DEFAULT_SOURCE_ID
    fixture_dir: Path | None = None
    endpoint: str | None = None
    credential_env: str | None = None
    field_map: Mapping[str, str] = field(
        default_factory=lambda: dict(DEFAULT_FIELD_MAP))

    def __post_init__(self):
        if self.mode not in ("fixture", "live"):
            raise EnrichmentError(f"unknown reputation mode {self.mode!r}")
        if self.mode == "fixture" and self.fixture_dir is None:
            raise EnrichmentError("fixture mode requires fixture_dir")
        if self.mode == "live" and not (self.endpoint and self.credential_env):
            raise EnrichmentError("live mode requires endpoint and credential_env")
        missing = set(DEFAULT_FIELD_MAP) - set(self.field_map)
        if missing:
            raise EnrichmentError(
                f"field_map is missing keys: {', '.join(sorted(missing))}")


@dataclass
class EnrichmentReport:
    queried: int = 0
    found: int = 0
    triples_added: int = 0
    errors: list[str] = field(default_factory=list)


def _coerce_date(value) -> str:
    if isinstance(value, datetime.datetime):
        return value.date().isoformat()
    if isinstance(value, datetime.date):
        return value.isoformat()
    if isinstance(value, str):
        return value.strip()
    raise ReputationResponseError(f"first_seen has unusable type {type(value).__name__}")


def _record_from_fields(digest: str, kind: str, data: Mapping,
                        field_map: Mapping[str, str]) -> FactRecord:
    if field_map["first_seen"] not in data:
        raise ReputationResponseError(
            f"record for {digest} lacks the {field_map['first_seen']!r} field")
    first_seen = _coerce_date(data[field_map["first_seen"]])
    raw_labels = data.get(field_map["labels"], [])
    if isinstance(raw_labels, str):
        raw_labels = [raw_labels]
    if not isinstance(raw_labels, (list, tuple, set, frozenset)) or any(
            not isinstance(item, str) for item in raw_labels):
        raise ReputationResponseError(f"record for {digest} has malformed labels")
    labels = frozenset(item.strip() for item in raw_labels if item.strip())
    file_type = data.get(field_map["file_type"])
    if file_type is not None:
        if not isinstance(file_type, str):
            raise ReputationResponseError(f"record for {digest} has malformed file_type")
        file_type = file_type.strip() or None
    return FactRecord(hash=digest, hash_kind=kind, first_seen=first_seen,
                      labels=labels, file_type=file_type)


def _fixture_lookup(source: ReputationSource, digest: str, kind: str) -> FactRecord | None:
    path = Path(source.fixture_dir) / digest
    if not path.is_file():
        return None
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ReputationResponseError(
            f"fixture record for {digest} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ReputationResponseError(f"fixture record for {digest} is not a mapping")
    return _record_from_fields(digest, kind, data, DEFAULT_FIELD_MAP)


def _parse_retry_after(raw: str | None) -> float | None:
    if raw is None:
        return None
    try:
        value = float(raw.strip())
    except ValueError:
        return None
    return max(value, 0.0)


def _live_lookup(source: ReputationSource, digest: str, kind: str,
                 session=None, _retried: bool = False) -> FactRecord | None:
    sess = session if session is not None else requests
    key = os.environ.get(source.credential_env or "")
    if not key:
        raise ReputationAuthError(
            f"credential env var {source.credential_env!r} is not set")
    url = source.endpoint.rstrip("/") + "/" + digest
    try:
        resp = sess.get(url, headers={CREDENTIAL_HEADER: key},
                        timeout=REQUEST_TIMEOUT)
    except requests.RequestException as exc:
        raise ReputationResponseError(f"transport failure for {digest}: {exc}") from exc
    if resp.status_code == 404:
        return None
    if resp.status_code in (401, 403):
        raise ReputationAuthError(
            f"reputation endpoint rejected credentials (HTTP {resp.status_code})")
    if resp.status_code == 429:
        retry_after = _parse_retry_after(resp.headers.get("Retry-After"))
        if not _retried and retry_after is not None and retry_after <= _RETRY_CAP:
            time.sleep(retry_after)
            return _live_lookup(source, digest, kind, session, _retried=True)
        raise ReputationRateLimitError(
            f"reputation endpoint rate limited the lookup of {digest}", retry_after)
    if resp.status_code != 200:
        raise ReputationResponseError(
            f"unexpected HTTP {resp.status_code} for {digest}")
    try:
        data = resp.json()
    except ValueError as exc:
        raise ReputationResponseError(
            f"response for {digest} is not valid JSON") from exc
    if not isinstance(data, dict):
        raise ReputationResponseError(f"response for {digest} is not a JSON object")
    return _record_from_fields(digest, kind, data, source.field_map)


def lookup(source: ReputationSource, hash_text: str,
           session=None) -> FactRecord | None:
    """Resolve one hash against the source; None means not known there."""
    digest, kind = normalize_hash(hash_text)
    if source.mode == "fixture":
        return _fixture_lookup(source, digest, kind)
    return _live_lookup(source, digest, kind, session)


def _apply_record(kg: KnowledgeGraph, ent: Entity, record: FactRecord,
                  source_id: str) -> int:
    prov = Provenance(source_id, "enrichment", 1.0)
    added = 0
    with kg.lock:
        date_ent, _ = kg.upsert_entity("Date", record.first_seen)
        status, _ = kg.insert_triple(ent.id, "firstSeenOn", date_ent.id, prov)
        if status == "inserted":
            added += 1
        for label in sorted(record.labels):
            label_ent, _ = kg.upsert_entity("Label", label)
            status, _ = kg.insert_triple(ent.id, "labeledAs", label_ent.id, prov)
            if status == "inserted":
                added += 1
        if record.file_type:
            ent.attributes.setdefault("file_type", record.file_type)
    return added


def enrich(kg: KnowledgeGraph, schema: Schema | None, source: ReputationSource,
           parallelism: int = 4, session=None) -> EnrichmentReport:
    """Look up every Hash-class entity and fold found facts into the graph.

    Per-hash failures land in report.errors; the batch never aborts.  Writes
    go through the store lock one entity at a time, so lookups may overlap
    but the graph only ever sees complete records.
    """
    schema = schema or kg.schema
    report = EnrichmentReport()
    with kg.lock:
        hash_entities = sorted(
            (e for e in kg.entities.values()
             if schema.is_subclass(e.class_name, "Hash")),
            key=lambda e: e.id)
    jobs: list[tuple[Entity, str]] = []
    for ent in hash_entities:
        report.queried += 1
        try:
            digest, _ = normalize_hash(ent.canonical_name)
        except InvalidHashError as exc:
            report.errors.append(f"{ent.id}: {exc}")
            continue
        jobs.append((ent, digest))

    def fetch(digest: str):
        try:
            return lookup(source, digest, session)
        except EnrichmentError as exc:
            return exc

    unique = sorted({digest for _, digest in jobs})
    results = {}
    if parallelism > 1 and len(unique) > 1:
        with ThreadPoolExecutor(max_workers=min(parallelism, len(unique))) as pool:
            results = dict(zip(unique, pool.map(fetch, unique)))
    else:
        results = {digest: fetch(digest) for digest in unique}

    for ent, digest in jobs:
        outcome = results[digest]
        if isinstance(outcome, EnrichmentError):
            report.errors.append(f"{ent.id}: {outcome}")
            continue
        if outcome is None:
            continue
        report.found += 1
        report.triples_added += _apply_record(kg, ent, outcome, source.source_id)
    return report
