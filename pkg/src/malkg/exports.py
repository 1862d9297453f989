"""Serialization to N-Triples, the UI graph document, and DOT."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import NTriplesParseError
from .ontology import Schema
from .query import Subgraph
from .store import Entity, KnowledgeGraph, Provenance, Triple

IMPORT_REPORT_ID = "ntriples-import"


@dataclass(frozen=True)
class IriPolicy:
    """IRI shapes for exported graphs; `meta:` and `inf:` are reserved."""

    base: str = "urn:malkg:"

    def entity(self, entity_id: str) -> str:
        return f"{self.base}entity:{entity_id}"

    def relation(self, name: str, inferred: bool = False) -> str:
        return f"{self.base}{'inf' if inferred else 'rel'}:{name}"

    def meta(self, field: str) -> str:
        return f"{self.base}meta:{field}"


DEFAULT_POLICY = IriPolicy()


def as_subgraph(graph: KnowledgeGraph | Subgraph,
                include_inferred: bool = True) -> Subgraph:
    if isinstance(graph, Subgraph):
        return graph
    nodes = [graph.entities[i] for i in sorted(graph.entities)]
    edges = list(graph.iter_triples(include_inferred=include_inferred))
    return Subgraph(nodes=nodes, edges=edges)


# -- N-Triples ----------------------------------------------------------------

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _escape_literal(value: str, ascii_only: bool) -> str:
    out = []
    for ch in value:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ascii_only and not ch.isascii():
            code = ord(ch)
            out.append(f"\\u{code:04X}" if code <= 0xFFFF else f"\\U{code:08X}")
        else:
            out.append(ch)
    return "".join(out)


def _unescape_literal(raw: str, line_no: int) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(raw):
            raise NTriplesParseError("dangling escape in literal", line_no)
        nxt = raw[i + 1]
        simple = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}
        if nxt in simple:
            out.append(simple[nxt])
            i += 2
        elif nxt in ("u", "U"):
            width = 4 if nxt == "u" else 8
            hexpart = raw[i + 2:i + 2 + width]
            if len(hexpart) != width:
                raise NTriplesParseError("truncated UCHAR escape", line_no)
            try:
                out.append(chr(int(hexpart, 16)))
            except ValueError:
                raise NTriplesParseError(f"bad UCHAR escape \\{nxt}{hexpart}",
                                         line_no) from None
            i += 2 + width
        else:
            raise NTriplesParseError(f"unknown escape \\{nxt}", line_no)
    return "".join(out)


def export_ntriples(graph: KnowledgeGraph | Subgraph,
                    policy: IriPolicy = DEFAULT_POLICY,
                    ascii_only: bool = False) -> str:
    """One sorted statement line per triple plus name/class/alias meta lines."""
    sub = as_subgraph(graph)
    lines = []
    for ent in sub.nodes:
        subject = f"<{policy.entity(ent.id)}>"
        name = _escape_literal(ent.canonical_name, ascii_only)
        lines.append(f'{subject} <{policy.meta("name")}> "{name}" .')
        lines.append(f'{subject} <{policy.meta("class")}> "{ent.class_name}" .')
        for alias in sorted(ent.aliases):
            alias_lit = _escape_literal(alias, ascii_only)
            lines.append(f'{subject} <{policy.meta("alias")}> "{alias_lit}" .')
    for t in sub.edges:
        lines.append(f"<{policy.entity(t.head)}> "
                     f"<{policy.relation(t.relation, t.inferred)}> "
                     f"<{policy.entity(t.tail)}> .")
    if not lines:
        return ""
    return "\n".join(sorted(lines)) + "\n"


def _parse_term(token: str, line_no: int) -> tuple[str, str]:
    if token.startswith("<") and token.endswith(">"):
        return "iri", token[1:-1]
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return "literal", _unescape_literal(token[1:-1], line_no)
    raise NTriplesParseError(f"unparseable term {token}", line_no)


def _split_statement(line: str, line_no: int) -> list[str]:
    # Terms are IRIs or literals; whitespace splits except inside quotes.
    tokens, buf, in_literal, escaped = [], [], False, False
    for ch in line:
        if in_literal:
            buf.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_literal = False
            continue
        if ch == '"':
            in_literal = True
            buf.append(ch)
        elif ch.isspace():
            if buf:
                tokens.append("".join(buf))
                buf = []
        else:
            buf.append(ch)
    if buf:
        tokens.append("".join(buf))
    if in_literal:
        raise NTriplesParseError("unterminated literal", line_no)
    return tokens


def load_ntriples(text: str, schema: Schema | None = None,
                  policy: IriPolicy = DEFAULT_POLICY) -> KnowledgeGraph:
    """Rebuild a graph exported by export_ntriples (provenance is synthetic)."""
    kg = KnowledgeGraph(schema)
    names: dict[str, str] = {}
    classes: dict[str, str] = {}
    aliases: dict[str, list[str]] = {}
    statements: list[tuple[int, str, str, str, bool]] = []

    def entity_id(iri: str, line_no: int) -> str:
        prefix = f"{policy.base}entity:"
        if not iri.startswith(prefix) or len(iri) == len(prefix):
            raise NTriplesParseError(f"unknown IRI shape <{iri}>", line_no)
        return iri[len(prefix):]

    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = _split_statement(line, line_no)
        if len(tokens) != 4 or tokens[3] != ".":
            raise NTriplesParseError(
                "expected `<subject> <predicate> <object> .`", line_no)
        s_kind, subject = _parse_term(tokens[0], line_no)
        p_kind, predicate = _parse_term(tokens[1], line_no)
        o_kind, obj = _parse_term(tokens[2], line_no)
        if s_kind != "iri" or p_kind != "iri":
            raise NTriplesParseError("subject and predicate must be IRIs", line_no)
        subject_id = entity_id(subject, line_no)
        if predicate == policy.meta("name"):
            names[subject_id] = obj
        elif predicate == policy.meta("class"):
            classes[subject_id] = obj
        elif predicate == policy.meta("alias"):
            aliases.setdefault(subject_id, []).append(obj)
        elif predicate.startswith(f"{policy.base}rel:") or \
                predicate.startswith(f"{policy.base}inf:"):
            if o_kind != "iri":
                raise NTriplesParseError("statement object must be an IRI", line_no)
            inferred = predicate.startswith(f"{policy.base}inf:")
            relation = predicate[len(policy.base) + len("rel:"):]
            statements.append((line_no, subject_id, relation,
                               entity_id(obj, line_no), inferred))
        else:
            raise NTriplesParseError(f"unknown IRI shape <{predicate}>", line_no)

    referenced = set(names) | set(classes) | {s for _, s, _, _, _ in statements} \
        | {o for _, _, _, o, _ in statements}
    for ent_id in sorted(referenced):
        if ent_id not in names or ent_id not in classes:
            raise NTriplesParseError(
                f"entity {ent_id} lacks name/class meta statements", 0)
        ent = Entity(id=ent_id, class_name=classes[ent_id],
                     canonical_name=names[ent_id],
                     aliases=set(aliases.get(ent_id, [])))
        kg.entities[ent.id] = ent
        for name in ent.names():
            kg._index_name(name, ent.id)
        if ent_id.startswith("e") and ent_id[1:].isdigit():
            kg._id_counter = max(kg._id_counter, int(ent_id[1:]))
    for line_no, head, relation, tail, inferred in statements:
        method = "inference" if inferred else "rule"
        prov = Provenance(IMPORT_REPORT_ID, method, 1.0)
        try:
            kg.insert_triple(head, relation, tail, prov, inferred=inferred)
        except Exception as exc:
            raise NTriplesParseError(str(exc), line_no) from exc
    return kg


# -- graph document -----------------------------------------------------------

def graph_document(sub: Subgraph) -> dict:
    """The node/edge structure the explorer consumes; field set is frozen."""
    nodes = []
    for ent in sorted(sub.nodes, key=lambda e: e.id):
        nodes.append({
            "id": ent.id,
            "label": ent.canonical_name,
            "class": ent.class_name,
            "aliases": sorted(ent.aliases),
        })
    edges = []
    for t in sorted(sub.edges, key=lambda t: t.key):
        reports = sorted({p.report_id for p in t.provenance if p.method != "inference"})
        edges.append({
            "source": t.head,
            "target": t.tail,
            "relation": t.relation,
            "inferred": t.inferred,
            "confidence": t.confidence(),
            "reports": reports,
        })
    doc = {"nodes": nodes, "edges": edges}
    if sub.root is not None:
        doc["root"] = sub.root
    return doc


def to_canonical_json(document: dict) -> str:
    """The one JSON renderer every surface shares, so bytes always agree."""
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def export_graph_document(graph: KnowledgeGraph | Subgraph,
                          include_inferred: bool = True) -> str:
    return to_canonical_json(graph_document(as_subgraph(graph, include_inferred)))


# -- DOT ----------------------------------------------------------------------

def _dot_quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(graph: KnowledgeGraph | Subgraph,
               include_inferred: bool = True) -> str:
    sub = as_subgraph(graph, include_inferred)
    if not sub.nodes and not sub.edges:
        return "digraph malkg { }\n"
    lines = ["digraph malkg {"]
    for ent in sorted(sub.nodes, key=lambda e: e.id):
        lines.append(f"  {_dot_quote(ent.id)} [label={_dot_quote(ent.canonical_name)}];")
    for t in sorted(sub.edges, key=lambda t: t.key):
        style = ", style=dashed" if t.inferred else ""
        lines.append(f"  {_dot_quote(t.head)} -> {_dot_quote(t.tail)} "
                     f"[label={_dot_quote(t.relation)}{style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
