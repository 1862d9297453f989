"""Command-line interface.

Query subcommands print the same canonical JSON documents the HTTP service
returns; `--format table` switches to a terse human-readable rendering.
Operational failures print one machine-parsable line on stderr and exit 1;
usage mistakes exit 2.
"""

from __future__ import annotations

import functools
import signal
import sys
import threading
from pathlib import Path

import click

from .brat import load_corpus
from .config import AppConfig, load_config
from .enrichment import enrich
from .errors import ConfigError, MalkgError
from .exports import (
    as_subgraph,
    export_dot,
    export_graph_document,
    export_ntriples,
    to_canonical_json,
)
from .feed import (
    FeedItem,
    extract_triples_rules,
    fetch,
    gazetteer_from_kg,
    run_watch,
    write_snapshot_atomic,
)
from .inference import materialize
from .ontology import export_brat_config, load_schema_file
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
from .service import load_app_schema, load_graph
from .service import serve as run_server


class AppState:
    """Lazily loaded config, schema, and graph shared by the subcommands."""

    def __init__(self, config_path: str | None):
        self._config_path = config_path
        self._config: AppConfig | None = None
        self._schema = None
        self._kg = None

    @property
    def config(self) -> AppConfig:
        if self._config is None:
            if self._config_path is not None:
                self._config = load_config(self._config_path)
            else:
                self._config = AppConfig().validate()
        return self._config

    @property
    def schema(self):
        if self._schema is None:
            self._schema = load_app_schema(self.config)
        return self._schema

    @property
    def kg(self):
        if self._kg is None:
            self._kg = load_graph(self.config, self.schema)
        return self._kg

    def save(self) -> None:
        write_snapshot_atomic(self.kg, self.config.snapshot_path)


pass_state = click.make_pass_decorator(AppState)


def operational(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MalkgError as exc:
            click.echo(f"error: {exc.code}: {exc}", err=True)
            sys.exit(1)
    return wrapper


def emit(payload: dict) -> None:
    click.echo(to_canonical_json(payload), nl=False)


def _label_map(payload: dict) -> dict[str, str]:
    return {n["id"]: n["label"] for n in payload.get("nodes", [])}


def _edge_lines(payload: dict) -> list[str]:
    labels = _label_map(payload)
    lines = []
    for edge in payload.get("edges", []):
        mark = "~" if edge.get("inferred") else "-"
        lines.append(f"{labels.get(edge['source'], edge['source'])} "
                     f"{mark}[{edge['relation']}]-> "
                     f"{labels.get(edge['target'], edge['target'])}")
    return lines


@click.group()
@click.option("--config", "-c", "config_path", type=click.Path(),
              envvar="MALKG_CONFIG", default=None,
              help="YAML config file; defaults apply when omitted.")
@click.pass_context
def main(ctx, config_path):
    """Threat-intelligence knowledge graph toolkit."""
    ctx.obj = AppState(config_path)


# -- schema -------------------------------------------------------------


@main.group()
def schema():
    """Inspect or export the ontology."""


@schema.command("validate")
@click.option("--schema", "schema_path", type=click.Path(exists=False),
              default=None, help="Schema file to check instead of the configured one.")
@pass_state
@operational
def schema_validate(state, schema_path):
    """Load the schema and report its shape; exits 1 if it does not validate."""
    loaded = load_schema_file(schema_path) if schema_path else state.schema
    click.echo(f"schema {loaded.version}: {len(loaded.classes)} classes, "
               f"{len(loaded.relations)} relations")


@schema.command("export-brat")
@pass_state
@operational
def schema_export_brat(state):
    """Print an annotation configuration derived from the schema."""
    click.echo(export_brat_config(state.schema), nl=False)


# -- ingestion ----------------------------------------------------------


@main.group()
def ingest():
    """Bring annotated corpora or feed reports into the graph."""


@ingest.command("brat")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@pass_state
@operational
def ingest_brat(state, directory):
    """Ingest every paired .txt/.ann document under DIRECTORY."""
    docs, stats = load_corpus(directory, state.schema, mode=state.config.mode)
    totals = {"documents": 0, "new_entities": 0, "new_triples": 0,
              "merged": 0, "rejected": 0}
    warnings: list[str] = []
    for doc, candidates in docs:
        report = state.kg.ingest_document(doc.doc_id, candidates,
                                          mode=state.config.mode)
        totals["documents"] += 1
        totals["new_entities"] += report.new_entities
        totals["new_triples"] += report.new_triples
        totals["merged"] += report.merged
        totals["rejected"] += report.rejected
        warnings.extend(f"{doc.doc_id}: {w}" for w in report.warnings)
    state.save()
    emit({**totals, "warnings": warnings, "errors": list(stats.errors)})


@ingest.command("report")
@click.argument("ref")
@pass_state
@operational
def ingest_report(state, ref):
    """Fetch one report by path or URL and ingest its extracted facts."""
    doc = fetch(FeedItem(ref=ref))
    extraction = extract_triples_rules(doc, gazetteer_from_kg(state.kg, state.schema))
    report = state.kg.ingest_document(doc.report_id, extraction.triples,
                                      extraction.entities, mode=state.config.mode)
    state.save()
    emit(ingest_payload(doc.report_id, report))


@main.command("enrich")
@pass_state
@operational
def enrich_cmd(state):
    """Look up every hash entity against the reputation source."""
    source = state.config.reputation_source()
    report = enrich(state.kg, state.schema, source,
                    parallelism=state.config.parallelism)
    state.save()
    emit(enrichment_payload(report))


@main.command()
@pass_state
@operational
def infer(state):
    """Materialize inverse, symmetric, and transitive consequences."""
    count = materialize(state.kg, state.schema)
    state.save()
    emit({"inferred": count})


# -- queries ------------------------------------------------------------


format_option = click.option("--format", "fmt",
                             type=click.Choice(["json", "table"]),
                             default="json", show_default=True)


@main.group()
def query():
    """Analyst queries over the current graph."""


@query.command("entity")
@click.option("--q", required=True, help="Name or alias fragment to search for.")
@click.option("--class", "class_name", default=None)
@click.option("--limit", type=click.IntRange(min=1), default=None)
@format_option
@pass_state
@operational
def query_entity(state, q, class_name, limit, fmt):
    """Ranked search over entity names and aliases."""
    payload = search_payload(state.kg, q, class_name, limit)
    if fmt == "table":
        for m in payload["matches"]:
            aliases = ", ".join(m["aliases"])
            suffix = f" (aka {aliases})" if aliases else ""
            click.echo(f"{m['id']}\t{m['class']}\t{m['label']}{suffix}")
        return
    emit(payload)


@query.command("neighborhood")
@click.argument("ref")
@click.option("--hops", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--inferred/--no-inferred", "inferred", default=None,
              help="Include inferred edges (defaults from config).")
@click.option("--relation", "relations", multiple=True,
              help="Restrict to these relation names; repeatable.")
@format_option
@pass_state
@operational
def query_neighborhood(state, ref, hops, inferred, relations, fmt):
    """Subgraph within HOPS of the entity named or identified by REF."""
    include = state.config.include_inferred if inferred is None else inferred
    with state.kg.lock:
        ent = resolve_entity_ref(state.kg, ref)
        sub = neighborhood(state.kg, ent.id, hops=hops, include_inferred=include,
                           relations=set(relations) or None)
        payload = subgraph_payload(state.kg, sub)
    if fmt == "table":
        for line in _edge_lines(payload):
            click.echo(line)
        return
    emit(payload)


@query.command("path")
@click.option("--from", "from_", required=True)
@click.option("--to", required=True)
@click.option("--max-len", type=click.IntRange(min=1), default=6, show_default=True)
@click.option("--directed", is_flag=True, default=False)
@click.option("--inferred/--no-inferred", "inferred", default=None)
@format_option
@pass_state
@operational
def query_path(state, from_, to, max_len, directed, inferred, fmt):
    """All shortest connections between two entities."""
    include = state.config.include_inferred if inferred is None else inferred
    with state.kg.lock:
        start = resolve_entity_ref(state.kg, from_)
        goal = resolve_entity_ref(state.kg, to)
        result = shortest_paths(state.kg, start.id, goal.id, max_len=max_len,
                                directed=directed, include_inferred=include)
        payload = path_payload(state.kg, start.id, goal.id, result)
    if fmt == "table":
        if payload["length"] is None:
            click.echo("no path found")
            return
        labels = _label_map(payload)
        for path in payload["paths"]:
            parts = [labels.get(path[0], path[0])]
            for rel, node in zip(path[1::2], path[2::2]):
                parts.append(f"-[{rel}]-> {labels.get(node, node)}")
            click.echo(" ".join(parts))
        return
    emit(payload)


@query.command("report")
@click.argument("report_id")
@format_option
@pass_state
@operational
def query_report(state, report_id, fmt):
    """Everything a single report contributed."""
    with state.kg.lock:
        payload = subgraph_payload(state.kg, report_subgraph(state.kg, report_id))
    if fmt == "table":
        for line in _edge_lines(payload):
            click.echo(line)
        return
    emit(payload)


@query.command("missing")
@click.option("--class", "class_name", required=True)
@format_option
@pass_state
@operational
def query_missing(state, class_name, fmt):
    """Entities of a class lacking some expected relation."""
    payload = missing_payload(state.kg, state.schema, class_name)
    if fmt == "table":
        for row in payload["entities"]:
            click.echo(f"{row['label']} ({row['id']}): {', '.join(row['missing'])}")
        return
    emit(payload)


@query.command("similar")
@click.option("--class", "class_name", required=True)
@click.option("--threshold", type=float, default=0.2, show_default=True)
@click.option("--generalize-tails", is_flag=True, default=False,
              help="Compare tail classes instead of tail identities.")
@format_option
@pass_state
@operational
def query_similar(state, class_name, threshold, generalize_tails, fmt):
    """Cluster entities of a class by shared outgoing facts."""
    payload = similar_payload(state.kg, class_name, threshold, generalize_tails)
    if fmt == "table":
        for i, cluster in enumerate(payload["clusters"], start=1):
            names = [state.kg.entities[e].canonical_name for e in cluster]
            click.echo(f"cluster {i}: {', '.join(names)}")
        for row in payload["scores"]:
            click.echo(f"{row['a']} ~ {row['b']}: {row['score']:.3f}")
        return
    emit(payload)


# -- exports ------------------------------------------------------------


output_option = click.option("--output", "-o", type=click.Path(), default=None,
                             help="Write to a file instead of stdout.")
inferred_option = click.option("--inferred/--no-inferred", "inferred",
                               default=None,
                               help="Include inferred edges (defaults from config).")


def _write_out(text: str, output: str | None) -> None:
    if output is None:
        click.echo(text, nl=False)
    else:
        Path(output).write_text(text, "utf-8")


@main.group()
def export():
    """Serialize the graph."""


@export.command("ntriples")
@click.option("--ascii", "ascii_only", is_flag=True, default=False,
              help="Escape non-ASCII characters.")
@inferred_option
@output_option
@pass_state
@operational
def export_ntriples_cmd(state, ascii_only, inferred, output):
    include = state.config.include_inferred if inferred is None else inferred
    with state.kg.lock:
        text = export_ntriples(as_subgraph(state.kg, include_inferred=include),
                               ascii_only=ascii_only)
    _write_out(text, output)


@export.command("graph")
@inferred_option
@output_option
@pass_state
@operational
def export_graph_cmd(state, inferred, output):
    include = state.config.include_inferred if inferred is None else inferred
    with state.kg.lock:
        text = export_graph_document(state.kg, include_inferred=include)
    _write_out(text, output)


@export.command("dot")
@inferred_option
@output_option
@pass_state
@operational
def export_dot_cmd(state, inferred, output):
    include = state.config.include_inferred if inferred is None else inferred
    with state.kg.lock:
        text = export_dot(state.kg, include_inferred=include)
    _write_out(text, output)


# -- operations ---------------------------------------------------------


@main.command()
@pass_state
@operational
def stats(state):
    """Entity, triple, and report counts."""
    emit(stats_payload(state.kg))


@main.command()
@click.option("--host", default=None, help="Override the configured host.")
@click.option("--port", type=int, default=None, help="Override the configured port.")
@pass_state
@operational
def serve(state, host, port):
    """Run the HTTP API until interrupted."""
    config = state.config
    if host is not None:
        config.host = host
    if port is not None:
        config.port = port
    config.validate()
    try:
        run_server(config)
    except OSError as exc:
        click.echo(f"error: port-busy: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--once", is_flag=True, default=False,
              help="Run a single poll pass and exit.")
@click.option("--interval", type=float, default=None,
              help="Seconds between polls (defaults from config).")
@pass_state
@operational
def watch(state, once, interval):
    """Poll the feed manifest, ingesting and re-inferring per batch."""
    config = state.config
    if config.feed_manifest is None:
        raise ConfigError("required for watch mode", field="feed_manifest")
    stop = threading.Event()

    def request_stop(signum, frame):
        stop.set()

    previous = signal.signal(signal.SIGINT, request_stop)
    try:
        batches = run_watch(state.kg, config.feed_manifest, config.state_dir,
                            config.snapshot_path, schema=state.schema,
                            interval=interval or config.watch_interval,
                            shutdown=stop, once=once, mode=config.mode)
    finally:
        signal.signal(signal.SIGINT, previous)
    for batch in batches:
        click.echo(to_canonical_json({
            "polled": batch.polled,
            "ingested": len(batch.ingested),
            "new_triples": sum(r.new_triples for _, r in batch.ingested),
            "new_entities": sum(r.new_entities for _, r in batch.ingested),
            "errors": batch.errors,
            "inferred": batch.inferred,
        }), nl=False)


if __name__ == "__main__":
    main()
