"""Report feed acquisition and rule-based extraction.

The acquisition loop is deliberately source-agnostic: a manifest file lists
report references (local paths or URLs) with publisher metadata, and a
watcher polls it, fetches new reports, pulls indicators of compromise out of
the text, turns sentence-level co-occurrences into candidate triples, and
appends everything to the knowledge graph.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from html.parser import HTMLParser
from importlib import resources
from pathlib import Path

import requests

from .errors import (
    EmptyTextError,
    FetchError,
    MalkgError,
    ManifestError,
)
from .inference import materialize, retract_inferred
from .ontology import Schema
from .store import (
    CandidateEntity,
    CandidateTriple,
    IngestReport,
    KnowledgeGraph,
    Provenance,
)

log = logging.getLogger(__name__)

IOC_KINDS = ("url", "sha256", "sha1", "md5", "cve", "ipv4", "domain")

IOC_CLASSES = {
    "md5": "Hash",
    "sha1": "Hash",
    "sha256": "Hash",
    "cve": "Vulnerability",
    "ipv4": "IPAddress",
    "domain": "DomainName",
    "url": "URL",
}

RULE_CONFIDENCE = {"hasHash": 0.6, "exploits": 0.5, "communicatesWith": 0.4}

_PATTERNS = {
    "md5": re.compile(r"\b[a-fA-F0-9]{32}\b"),
    "sha1": re.compile(r"\b[a-fA-F0-9]{40}\b"),
    "sha256": re.compile(r"\b[a-fA-F0-9]{64}\b"),
    "cve": re.compile(r"\bCVE-\d{4}-\d{4,7}\b"),
    "ipv4": re.compile(r"\b(?:\d{1,3}\.){3}\d{1,3}\b"),
    "domain": re.compile(r"\b([a-z0-9-]+\.)+[a-z]{2,}\b"),
    "url": re.compile(r"\bhttps?://\S+\b"),
}

_ABBREVIATIONS = {"e.g", "i.e", "etc", "vs", "cf", "al", "approx", "fig",
                  "mr", "mrs", "ms", "dr", "prof", "st", "inc", "ltd", "corp"}

REQUEST_TIMEOUT = 20.0


def _load_tlds() -> frozenset[str]:
    raw = resources.files("malkg.data").joinpath("tlds.txt").read_text("utf-8")
    entries = set()
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.add(line.lower())
    return frozenset(entries)


TLDS = _load_tlds()


@dataclass(frozen=True)
class FeedItem:
    ref: str
    source_handle: str = ""
    published_at: datetime | None = None

    def __post_init__(self):
        if not self.ref.strip():
            raise ManifestError("feed item ref must be nonempty")


@dataclass(frozen=True)
class IOC:
    kind: str
    value: str
    span: tuple[int, int]


def normalize_text(raw: str) -> str:
    """NFC then whitespace-collapsed; the canonical form reports are hashed on."""
    return re.sub(r"\s+", " ", unicodedata.normalize("NFC", raw)).strip()


@dataclass(frozen=True)
class ReportDocument:
    report_id: str
    text: str
    fetched_at: datetime
    origin: FeedItem | None = None

    @classmethod
    def from_text(cls, raw: str, origin: FeedItem | None = None,
                  fetched_at: datetime | None = None) -> "ReportDocument":
        text = normalize_text(raw)
        if not text:
            raise EmptyTextError("report has no text after normalization")
        report_id = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return cls(report_id=report_id, text=text,
                   fetched_at=fetched_at or datetime.now(timezone.utc),
                   origin=origin)


# --- manifest polling -------------------------------------------------------


class SeenState:
    """Refs already handed out by poll(), persisted as a JSON list."""

    def __init__(self, path: Path | str, refs: set[str] | None = None):
        self.path = Path(path)
        self.refs = set(refs or ())

    @classmethod
    def load(cls, path: Path | str) -> "SeenState":
        path = Path(path)
        if not path.exists():
            return cls(path)
        try:
            data = json.loads(path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ManifestError(f"unreadable dedup state {path}: {exc}") from exc
        if not isinstance(data, list) or any(not isinstance(r, str) for r in data):
            raise ManifestError(f"dedup state {path} is not a list of refs")
        return cls(path, set(data))

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text(json.dumps(sorted(self.refs), indent=2) + "\n", "utf-8")
        os.replace(tmp, self.path)


def parse_manifest(path: Path | str) -> list[FeedItem]:
    path = Path(path)
    try:
        raw = path.read_text("utf-8")
    except OSError as exc:
        raise ManifestError(f"unreadable manifest {path}: {exc}") from exc
    items = []
    for line_no, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ManifestError(
                f"line {line_no}: expected ref<TAB>source<TAB>published_at, "
                f"got {len(parts)} field(s)")
        ref, handle, published = (p.strip() for p in parts)
        if not ref:
            raise ManifestError(f"line {line_no}: empty ref")
        try:
            published_at = datetime.fromisoformat(published.replace("Z", "+00:00"))
        except ValueError as exc:
            raise ManifestError(
                f"line {line_no}: bad published_at {published!r}") from exc
        if published_at.tzinfo is None:
            published_at = published_at.replace(tzinfo=timezone.utc)
        if not ref.startswith(("http://", "https://")):
            ref = str((path.parent / ref).resolve())
        items.append(FeedItem(ref=ref, source_handle=handle,
                              published_at=published_at))
    return items


def poll(manifest: Path | str, seen: SeenState) -> list[FeedItem]:
    """Return manifest items whose ref has not been handed out before.

    Returned refs are recorded in (and persisted to) the dedup state right
    away, so a ref is attempted exactly once no matter how the batch fares;
    content-hash dedup downstream catches duplicates that arrive under new
    refs.
    """
    items = parse_manifest(manifest)
    fresh = [item for item in items if item.ref not in seen.refs]
    if fresh:
        seen.refs.update(item.ref for item in fresh)
        seen.save()
    return fresh


# --- fetching ---------------------------------------------------------------


class _VisibleText(HTMLParser):
    _SKIP = {"script", "style", "noscript", "template"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._suppress = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._suppress += 1
        else:
            self.parts.append(" ")

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._suppress:
            self._suppress -= 1
        else:
            self.parts.append(" ")

    def handle_data(self, data):
        if not self._suppress:
            self.parts.append(data)


def strip_html(markup: str) -> str:
    parser = _VisibleText()
    parser.feed(markup)
    parser.close()
    return "".join(parser.parts)


def _looks_like_html(ref: str, payload: str, content_type: str = "") -> bool:
    if "html" in content_type.lower():
        return True
    if ref.lower().endswith((".html", ".htm")):
        return True
    head = payload[:256].lstrip().lower()
    return head.startswith("<!doctype html") or head.startswith("<html")


def fetch(item: FeedItem, session=None) -> ReportDocument:
    """Resolve a feed ref to normalized report text."""
    content_type = ""
    if item.ref.startswith(("http://", "https://")):
        sess = session if session is not None else requests
        try:
            resp = sess.get(item.ref, timeout=REQUEST_TIMEOUT)
        except requests.RequestException as exc:
            raise FetchError(f"cannot fetch {item.ref}: {exc}") from exc
        if resp.status_code != 200:
            raise FetchError(f"cannot fetch {item.ref}: HTTP {resp.status_code}")
        payload = resp.text
        content_type = resp.headers.get("Content-Type", "")
    else:
        try:
            payload = Path(item.ref).read_text("utf-8", errors="replace")
        except OSError as exc:
            raise FetchError(f"cannot read {item.ref}: {exc}") from exc
    if _looks_like_html(item.ref, payload, content_type):
        payload = strip_html(payload)
    try:
        return ReportDocument.from_text(payload, origin=item)
    except EmptyTextError:
        raise EmptyTextError(f"{item.ref}: no text left after stripping") from None


# --- IOC extraction ---------------------------------------------------------


def rehydrate(text: str) -> str:
    """Undo common defanging so patterns see real indicators."""
    return text.replace("hxxp", "http").replace("[.]", ".")


def _valid_ipv4(value: str) -> bool:
    return all(int(octet) <= 255 for octet in value.split("."))


def _valid_domain(value: str) -> bool:
    return value.rsplit(".", 1)[-1] in TLDS


def extract_iocs(text: str) -> list[IOC]:
    """All pattern matches in the rehydrated text, longest match winning overlaps.

    Spans index into rehydrate(text), which equals the input when nothing was
    defanged.
    """
    hydrated = rehydrate(text)
    candidates = []
    for priority, kind in enumerate(IOC_KINDS):
        for m in _PATTERNS[kind].finditer(hydrated):
            value = m.group(0)
            if kind == "ipv4" and not _valid_ipv4(value):
                continue
            if kind == "domain" and not _valid_domain(value):
                continue
            if kind in ("md5", "sha1", "sha256"):
                value = value.lower()
            candidates.append((m.start(), -(m.end() - m.start()), priority,
                               IOC(kind, value, (m.start(), m.end()))))
    kept: list[IOC] = []
    last_end = -1
    for start, _neg_len, _prio, ioc in sorted(candidates, key=lambda c: c[:3]):
        if start >= last_end:
            kept.append(ioc)
            last_end = ioc.span[1]
    return kept


# --- sentence-scoped rule extraction ----------------------------------------


def split_sentences(text: str) -> list[tuple[int, int]]:
    """(start, end) spans of sentences; split on .!? before whitespace."""
    boundaries = []
    for m in re.finditer(r"[.!?]+(?=\s)", text):
        if m.group(0).startswith("."):
            prev = re.search(r"([\w.]*\w)\Z", text[:m.start()])
            if prev and prev.group(1).lower() in _ABBREVIATIONS:
                continue
        boundaries.append(m.end())
    spans = []
    start = 0
    for cut in boundaries + [len(text)]:
        chunk = text[start:cut]
        lead = len(chunk) - len(chunk.lstrip())
        if chunk.strip():
            spans.append((start + lead, start + lead + len(chunk.strip())))
        start = cut
    return spans


def gazetteer_from_kg(kg: KnowledgeGraph,
                      schema: Schema | None = None) -> dict[str, tuple[str, str]]:
    """Known malware surface forms (casefolded) to (class, canonical name)."""
    schema = schema or kg.schema
    table: dict[str, tuple[str, str]] = {}
    with kg.lock:
        for ent in kg.entities.values():
            if not schema.is_subclass(ent.class_name, "Malware"):
                continue
            for name in sorted(ent.names()):
                table.setdefault(name.casefold(), (ent.class_name, ent.canonical_name))
    return table


@dataclass
class ExtractionResult:
    entities: list[CandidateEntity] = field(default_factory=list)
    triples: list[CandidateTriple] = field(default_factory=list)
    iocs: list[IOC] = field(default_factory=list)


def _relation_for(kind: str) -> str | None:
    if kind in ("md5", "sha1", "sha256"):
        return "hasHash"
    if kind == "cve":
        return "exploits"
    if kind in ("domain", "ipv4", "url"):
        return "communicatesWith"
    return None


def extract_triples_rules(doc: ReportDocument,
                          gazetteer: dict[str, tuple[str, str]]) -> ExtractionResult:
    """Deterministic co-occurrence rules over one report.

    A known malware name and an IOC in the same sentence yield a typed
    relation with a fixed per-rule confidence; every IOC becomes an entity
    either way.
    """
    hydrated = rehydrate(doc.text)
    iocs = extract_iocs(doc.text)
    result = ExtractionResult(iocs=iocs)

    seen_entities = set()
    for ioc in iocs:
        key = (IOC_CLASSES[ioc.kind], ioc.value)
        if key not in seen_entities:
            seen_entities.add(key)
            result.entities.append(CandidateEntity(*key))

    folded = hydrated.casefold()
    seen_triples = set()
    for s_start, s_end in split_sentences(hydrated):
        sentence = folded[s_start:s_end]
        mentioned = []
        seen_canon = set()
        for surface, (class_name, canonical) in sorted(gazetteer.items()):
            if canonical in seen_canon:
                continue
            if re.search(rf"(?<!\w){re.escape(surface)}(?!\w)", sentence):
                seen_canon.add(canonical)
                mentioned.append((class_name, canonical))
        if not mentioned:
            continue
        in_sentence = [i for i in iocs if s_start <= i.span[0] < s_end]
        for class_name, canonical in mentioned:
            for ioc in in_sentence:
                relation = _relation_for(ioc.kind)
                if relation is None:
                    continue
                key = (canonical, relation, ioc.value)
                if key in seen_triples:
                    continue
                seen_triples.add(key)
                result.triples.append(CandidateTriple(
                    head=CandidateEntity(class_name, canonical),
                    relation=relation,
                    tail=CandidateEntity(IOC_CLASSES[ioc.kind], ioc.value),
                    provenance=Provenance(doc.report_id, "rule",
                                          RULE_CONFIDENCE[relation]),
                ))
    return result


# --- the watch loop ---------------------------------------------------------


@dataclass
class BatchReport:
    polled: int = 0
    ingested: list[tuple[str, IngestReport]] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    inferred: int = 0
    snapshot_written: bool = False


def write_snapshot_atomic(kg: KnowledgeGraph, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(kg.snapshot_document(), "utf-8")
    os.replace(tmp, path)


def _append_journal(path: Path | str, batch: BatchReport) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    now = datetime.now(timezone.utc).isoformat()
    with path.open("a", encoding="utf-8") as fh:
        for report_id, rep in batch.ingested:
            fh.write(json.dumps({
                "ts": now,
                "report_id": report_id,
                "new_entities": rep.new_entities,
                "new_triples": rep.new_triples,
                "merged": rep.merged,
                "rejected": rep.rejected,
                "warnings": len(rep.warnings),
            }, sort_keys=True) + "\n")


def run_once(kg: KnowledgeGraph, manifest: Path | str, seen: SeenState,
             snapshot_path: Path | str, journal_path: Path | str,
             schema: Schema | None = None, mode: str = "lenient",
             session=None) -> BatchReport:
    """One poll/fetch/extract/ingest pass; per-item failures never abort it."""
    schema = schema or kg.schema
    batch = BatchReport()
    items = poll(manifest, seen)
    batch.polled = len(items)
    for item in items:
        try:
            doc = fetch(item, session=session)
            gaz = gazetteer_from_kg(kg, schema)
            extraction = extract_triples_rules(doc, gaz)
            report = kg.ingest_document(doc.report_id, extraction.triples,
                                        extraction.entities, mode=mode)
            batch.ingested.append((doc.report_id, report))
        except MalkgError as exc:
            log.warning("skipping %s: %s", item.ref, exc)
            batch.errors.append(f"{item.ref}: {exc}")
    if any(not rep.is_noop() for _, rep in batch.ingested):
        retract_inferred(kg)
        batch.inferred = materialize(kg, schema)
        write_snapshot_atomic(kg, snapshot_path)
        batch.snapshot_written = True
    if batch.ingested:
        _append_journal(journal_path, batch)
    return batch


def run_watch(kg: KnowledgeGraph, manifest: Path | str, state_dir: Path | str,
              snapshot_path: Path | str, schema: Schema | None = None,
              interval: float = 300.0, shutdown: threading.Event | None = None,
              once: bool = False, mode: str = "lenient",
              session=None) -> list[BatchReport]:
    """Poll the manifest until signaled (or once), snapshotting each change.

    A final snapshot is always flushed on the way out so a clean shutdown
    leaves the on-disk graph current.
    """
    state_dir = Path(state_dir)
    shutdown = shutdown or threading.Event()
    seen = SeenState.load(state_dir / "seen_refs.json")
    journal_path = state_dir / "journal.ndjson"
    batches = []
    while True:
        batch = run_once(kg, manifest, seen, snapshot_path, journal_path,
                         schema=schema, mode=mode, session=session)
        batches.append(batch)
        if once or shutdown.is_set():
            break
        if shutdown.wait(interval):
            break
    write_snapshot_atomic(kg, snapshot_path)
    return batches
