"""HTTP API over one knowledge graph.

The explorer UI and scripted clients consume the same payload builders the
CLI prints, rendered through the same canonical JSON serializer, so the two
surfaces can be diffed byte for byte.
"""

from __future__ import annotations

import logging
import threading
from contextlib import asynccontextmanager, contextmanager
from pathlib import Path

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from starlette.concurrency import run_in_threadpool

from .config import AppConfig
from .enrichment import enrich
from .errors import (
    MalkgError,
    UnknownEntityError,
    UnknownReportError,
    WriterBusyError,
)
from .exports import to_canonical_json
from .feed import (
    ReportDocument,
    extract_triples_rules,
    gazetteer_from_kg,
    run_watch,
    write_snapshot_atomic,
)
from .inference import materialize
from .ontology import Schema, default_schema, load_schema_file
from .payloads import (
    enrichment_payload,
    entity_detail_payload,
    ingest_payload,
    missing_payload,
    path_payload,
    schema_payload,
    search_payload,
    similar_payload,
    stats_payload,
    subgraph_payload,
)
from .query import (
    neighborhood,
    report_subgraph,
    resolve_entity_ref,
    shortest_paths,
)
from .store import KnowledgeGraph, load_snapshot

log = logging.getLogger(__name__)


def load_graph(config: AppConfig, schema: Schema) -> KnowledgeGraph:
    """Snapshot if present, else an empty graph; corrupt snapshots refuse."""
    path = Path(config.snapshot_path)
    if path.exists():
        return load_snapshot(path, schema)
    return KnowledgeGraph(schema)


def load_app_schema(config: AppConfig) -> Schema:
    if config.schema_path is not None:
        return load_schema_file(config.schema_path)
    return default_schema()


def _status_for(exc: MalkgError) -> int:
    if isinstance(exc, WriterBusyError):
        return 409
    if isinstance(exc, (UnknownEntityError, UnknownReportError)):
        return 404
    return 400


def create_app(config: AppConfig, kg: KnowledgeGraph | None = None) -> FastAPI:
    schema = load_app_schema(config)
    if kg is None:
        kg = load_graph(config, schema)
    writer_lock = threading.Lock()
    watch_stop = threading.Event()
    watch_thread: list[threading.Thread] = []

    @contextmanager
    def write_access():
        if not writer_lock.acquire(timeout=config.writer_timeout):
            raise WriterBusyError(
                f"another write is in progress (waited {config.writer_timeout:g}s)")
        try:
            yield
        finally:
            writer_lock.release()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if config.watch_in_serve and config.feed_manifest is not None:
            thread = threading.Thread(
                target=run_watch,
                args=(kg, config.feed_manifest, config.state_dir,
                      config.snapshot_path),
                kwargs={"schema": schema, "interval": config.watch_interval,
                        "shutdown": watch_stop, "mode": config.mode},
                daemon=True)
            thread.start()
            watch_thread.append(thread)
        yield
        watch_stop.set()
        for thread in watch_thread:
            thread.join(timeout=10)
        write_snapshot_atomic(kg, config.snapshot_path)

    app = FastAPI(title="malkg", lifespan=lifespan)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.kg = kg
    app.state.schema = schema
    app.state.config = config
    app.state.writer_lock = writer_lock

    def canonical(payload: dict) -> Response:
        return Response(to_canonical_json(payload), media_type="application/json")

    def error_response(status: int, code: str, message: str) -> Response:
        return Response(to_canonical_json({"code": code, "message": message}),
                        status_code=status, media_type="application/json")

    @app.exception_handler(MalkgError)
    async def malkg_error_handler(request: Request, exc: MalkgError):
        return error_response(_status_for(exc), exc.code, str(exc))

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return error_response(400, "usage", str(exc.errors()))

    @app.exception_handler(Exception)
    async def fallback_handler(request: Request, exc: Exception):
        log.exception("unhandled error on %s", request.url.path)
        return error_response(500, "internal-error", str(exc))

    @app.get("/entities")
    def entities(q: str, class_: str | None = Query(None, alias="class"),
                 limit: int | None = Query(None, ge=1)):
        return canonical(search_payload(kg, q, class_, limit))

    @app.get("/entities/{entity_id}")
    def entity_detail(entity_id: str):
        return canonical(entity_detail_payload(kg, entity_id))

    @app.get("/entities/{entity_id}/neighborhood")
    def entity_neighborhood(entity_id: str, hops: int = Query(1, ge=0),
                            inferred: bool | None = None,
                            relations: str | None = None):
        include = config.include_inferred if inferred is None else inferred
        wanted = None
        if relations:
            wanted = {r.strip() for r in relations.split(",") if r.strip()}
        with kg.lock:
            kg.entity(entity_id)
            sub = neighborhood(kg, entity_id, hops=hops,
                               include_inferred=include, relations=wanted)
            return canonical(subgraph_payload(kg, sub))

    @app.get("/paths")
    def paths(from_: str = Query(alias="from"), to: str = Query(),
              max_len: int = Query(6, ge=1), directed: bool = False,
              inferred: bool | None = None):
        include = config.include_inferred if inferred is None else inferred
        with kg.lock:
            start = resolve_entity_ref(kg, from_)
            goal = resolve_entity_ref(kg, to)
            result = shortest_paths(kg, start.id, goal.id, max_len=max_len,
                                    directed=directed, include_inferred=include)
            return canonical(path_payload(kg, start.id, goal.id, result))

    @app.get("/reports/{report_id}/subgraph")
    def report_graph(report_id: str):
        with kg.lock:
            sub = report_subgraph(kg, report_id)
            return canonical(subgraph_payload(kg, sub))

    @app.get("/missing")
    def missing(class_: str = Query(alias="class")):
        return canonical(missing_payload(kg, schema, class_))

    @app.get("/similar")
    def similar(class_: str = Query(alias="class"), threshold: float = Query(),
                generalize: bool = False):
        return canonical(similar_payload(kg, class_, threshold, generalize))

    @app.get("/stats")
    def stats():
        return canonical(stats_payload(kg))

    @app.get("/schema")
    def schema_doc():
        return canonical(schema_payload(schema))

    @app.post("/ingest/report")
    async def ingest_report(request: Request):
        raw = await request.body()

        def work() -> Response:
            with write_access():
                doc = ReportDocument.from_text(raw.decode("utf-8", errors="replace"))
                extraction = extract_triples_rules(doc, gazetteer_from_kg(kg, schema))
                report = kg.ingest_document(doc.report_id, extraction.triples,
                                            extraction.entities, mode=config.mode)
                return canonical(ingest_payload(doc.report_id, report))

        return await run_in_threadpool(work)

    @app.post("/admin/enrich")
    def admin_enrich():
        with write_access():
            source = config.reputation_source()
            report = enrich(kg, schema, source, parallelism=config.parallelism)
            return canonical(enrichment_payload(report))

    @app.post("/admin/infer")
    def admin_infer():
        with write_access():
            count = materialize(kg, schema)
            return canonical({"inferred": count})

    return app


def serve(config: AppConfig) -> None:
    """Run the API until interrupted; flushes a snapshot on shutdown."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
