"""N-Triples, graph-document, and DOT serialization."""

import json

import pytest
from hypothesis import given, settings, strategies as st

from malkg.errors import AliasConflictError, NTriplesParseError
from malkg.exports import (
    IriPolicy,
    as_subgraph,
    export_dot,
    export_graph_document,
    export_ntriples,
    graph_document,
    load_ntriples,
    to_canonical_json,
)
from malkg.inference import materialize
from malkg.query import neighborhood
from malkg.store import KnowledgeGraph, Provenance

from conftest import build_corpus_graph


def rule_prov(report="r1", confidence=0.9):
    return Provenance(report, "rule", confidence)


def graph_core(kg):
    """Everything N-Triples must preserve: no provenance, no attributes."""
    entities = {(e.id, e.class_name, e.canonical_name, frozenset(e.aliases))
                for e in kg.entities.values()}
    triples = {(t.key, t.inferred) for t in kg.triples.values()}
    return entities, triples


class TestIriPolicy:
    def test_shapes(self):
        policy = IriPolicy()
        assert policy.entity("e000001") == "urn:malkg:entity:e000001"
        assert policy.relation("hasAlias") == "urn:malkg:rel:hasAlias"
        assert policy.relation("hasAlias", inferred=True) == "urn:malkg:inf:hasAlias"
        assert policy.meta("name") == "urn:malkg:meta:name"


class TestExportNTriples:
    def test_empty_graph(self, schema):
        assert export_ntriples(KnowledgeGraph(schema)) == ""

    def test_alias_pair_golden(self, schema):
        kg = KnowledgeGraph(schema)
        peg, _ = kg.upsert_entity("Malware", "Pegasus")
        chry, _ = kg.upsert_entity("Malware", "Chrysaor")
        kg.insert_triple(peg.id, "hasAlias", chry.id, rule_prov())
        assert export_ntriples(kg) == (
            '<urn:malkg:entity:e000001> <urn:malkg:meta:class> "Malware" .\n'
            '<urn:malkg:entity:e000001> <urn:malkg:meta:name> "Pegasus" .\n'
            '<urn:malkg:entity:e000001> <urn:malkg:rel:hasAlias> <urn:malkg:entity:e000002> .\n'
            '<urn:malkg:entity:e000002> <urn:malkg:meta:class> "Malware" .\n'
            '<urn:malkg:entity:e000002> <urn:malkg:meta:name> "Chrysaor" .\n'
        )

    def test_statement_and_meta_line_counts(self, schema):
        kg = KnowledgeGraph(schema)
        peg, _ = kg.upsert_entity("Malware", "Pegasus")
        chry, _ = kg.upsert_entity("Malware", "Chrysaor")
        kg.insert_triple(peg.id, "hasAlias", chry.id, rule_prov())
        lines = export_ntriples(kg).splitlines()
        assert len(lines) == 5
        assert sum(1 for ln in lines if ":rel:" in ln) == 1
        assert sum(1 for ln in lines if ":meta:" in ln) == 4

    def test_escaping(self, schema):
        kg = KnowledgeGraph(schema)
        kg.upsert_entity("Malware", 'Bad"Name\\with\nnewline')
        text = export_ntriples(kg)
        assert '"Bad\\"Name\\\\with\\nnewline"' in text

    def test_ascii_flag_uses_uchar(self, schema):
        kg = KnowledgeGraph(schema)
        kg.upsert_entity("Malware", "Пегас")
        plain = export_ntriples(kg)
        assert "Пегас" in plain
        escaped = export_ntriples(kg, ascii_only=True)
        assert "\\u041F" in escaped and "Пегас" not in escaped

    def test_inferred_uses_inf_prefix(self, corpus_graph):
        materialize(corpus_graph)
        text = export_ntriples(corpus_graph)
        assert ":inf:hasAlias" in text
        assert ":rel:hasAlias" in text

    def test_equal_graphs_export_identically(self, schema):
        a = build_corpus_graph(schema)
        b = build_corpus_graph(schema)
        materialize(a)
        materialize(b)
        assert export_ntriples(a) == export_ntriples(b)

    def test_sorted_output(self, corpus_graph):
        lines = export_ntriples(corpus_graph).splitlines()
        assert lines == sorted(lines)


class TestLoadNTriples:
    def test_round_trip_corpus(self, corpus_graph, schema):
        materialize(corpus_graph)
        text = export_ntriples(corpus_graph)
        loaded = load_ntriples(text, schema)
        assert graph_core(loaded) == graph_core(corpus_graph)
        # And the round trip is a fixpoint at the byte level.
        assert export_ntriples(loaded) == text

    def test_missing_terminal_dot(self, schema):
        bad = '<urn:malkg:entity:e1> <urn:malkg:meta:name> "X"\n'
        with pytest.raises(NTriplesParseError) as err:
            load_ntriples(bad, schema)
        assert "line 1" in str(err.value)

    def test_foreign_iri_base(self, schema):
        bad = '<http://example.org/x> <urn:malkg:meta:name> "X" .\n'
        with pytest.raises(NTriplesParseError, match="unknown IRI shape"):
            load_ntriples(bad, schema)

    def test_missing_meta_for_referenced_entity(self, schema):
        text = ('<urn:malkg:entity:e1> <urn:malkg:meta:name> "A" .\n'
                '<urn:malkg:entity:e1> <urn:malkg:meta:class> "Malware" .\n'
                '<urn:malkg:entity:e1> <urn:malkg:rel:hasAlias> <urn:malkg:entity:e2> .\n')
        with pytest.raises(NTriplesParseError, match="e2"):
            load_ntriples(text, schema)

    def test_bad_escape(self, schema):
        bad = '<urn:malkg:entity:e1> <urn:malkg:meta:name> "A\\q" .\n'
        with pytest.raises(NTriplesParseError, match="escape"):
            load_ntriples(bad, schema)

    def test_unknown_relation_reports_line(self, schema):
        text = ('<urn:malkg:entity:e1> <urn:malkg:meta:name> "A" .\n'
                '<urn:malkg:entity:e1> <urn:malkg:meta:class> "Malware" .\n'
                '<urn:malkg:entity:e2> <urn:malkg:meta:name> "B" .\n'
                '<urn:malkg:entity:e2> <urn:malkg:meta:class> "Malware" .\n'
                '<urn:malkg:entity:e1> <urn:malkg:rel:zaps> <urn:malkg:entity:e2> .\n')
        with pytest.raises(NTriplesParseError) as err:
            load_ntriples(text, schema)
        assert "line 5" in str(err.value)

    def test_comments_and_blanks_ignored(self, schema):
        text = ('# a comment\n'
                '\n'
                '<urn:malkg:entity:e1> <urn:malkg:meta:name> "A" .\n'
                '<urn:malkg:entity:e1> <urn:malkg:meta:class> "Malware" .\n')
        loaded = load_ntriples(text, schema)
        assert len(loaded.entities) == 1


_NASTY = st.text(
    alphabet=st.sampled_from(list('ab"\\\n\r\tцλ readme')), min_size=1, max_size=12
).filter(lambda s: s.strip())


class TestRoundTripProperty:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(_NASTY, min_size=1, max_size=6, unique_by=lambda s: s.strip().casefold()),
           st.booleans())
    def test_nasty_names_survive(self, schema, names, ascii_only):
        kg = KnowledgeGraph(schema)
        ids = [kg.upsert_entity("Malware", name)[0].id for name in names]
        for a, b in zip(ids, ids[1:]):
            kg.insert_triple(a, "relatedTo", b, rule_prov())
        try:
            kg.add_alias(ids[0], "alias-" + names[-1])
        except AliasConflictError:
            pass
        text = export_ntriples(kg, ascii_only=ascii_only)
        loaded = load_ntriples(text, schema)
        assert graph_core(loaded) == graph_core(kg)


class TestGraphDocument:
    def test_empty(self, schema):
        doc = graph_document(as_subgraph(KnowledgeGraph(schema)))
        assert doc == {"nodes": [], "edges": []}

    def test_pegasus_one_hop_counts(self, corpus_graph):
        materialize(corpus_graph)
        peg = corpus_graph.entities_by_name("Pegasus", "Malware")[0]
        doc = graph_document(neighborhood(corpus_graph, peg.id, hops=1))
        assert len(doc["nodes"]) == 8
        assert len(doc["edges"]) == 12
        assert doc["root"] == peg.id
        node_ids = {n["id"] for n in doc["nodes"]}
        assert all(e["source"] in node_ids and e["target"] in node_ids
                   for e in doc["edges"])

    def test_edge_fields(self, corpus_graph):
        materialize(corpus_graph)
        doc = graph_document(as_subgraph(corpus_graph))
        alias_edges = [e for e in doc["edges"] if e["relation"] == "hasAlias"]
        asserted = next(e for e in alias_edges if not e["inferred"])
        inferred = next(e for e in alias_edges if e["inferred"])
        assert asserted["reports"] == ["pegasus-mini"]
        assert asserted["confidence"] == 1.0
        assert inferred["reports"] == []

    def test_alias_list_present(self, corpus_graph):
        doc = graph_document(as_subgraph(corpus_graph))
        peg = next(n for n in doc["nodes"] if n["label"] == "Pegasus")
        assert peg["aliases"] == ["Chrysaor"]
        assert peg["class"] == "Malware"

    def test_canonical_json_stable(self, schema):
        a = build_corpus_graph(schema)
        b = build_corpus_graph(schema)
        materialize(a)
        materialize(b)
        assert export_graph_document(a) == export_graph_document(b)
        parsed = json.loads(export_graph_document(a))
        assert set(parsed) == {"nodes", "edges"}

    def test_exclude_inferred(self, corpus_graph):
        materialize(corpus_graph)
        doc = json.loads(export_graph_document(corpus_graph, include_inferred=False))
        assert len(doc["edges"]) == 21
        assert all(not e["inferred"] for e in doc["edges"])


class TestExportDot:
    def test_empty(self, schema):
        assert export_dot(KnowledgeGraph(schema)) == "digraph malkg { }\n"

    def test_single_edge(self, schema):
        kg = KnowledgeGraph(schema)
        peg, _ = kg.upsert_entity("Malware", "Pegasus")
        chry, _ = kg.upsert_entity("Malware", "Chrysaor")
        kg.insert_triple(peg.id, "hasAlias", chry.id, rule_prov())
        dot = export_dot(kg)
        arrow_lines = [ln for ln in dot.splitlines() if "->" in ln]
        assert len(arrow_lines) == 1
        assert 'label="hasAlias"' in arrow_lines[0]
        assert "style=dashed" not in dot

    def test_inferred_edges_dashed(self, corpus_graph):
        materialize(corpus_graph)
        dot = export_dot(corpus_graph)
        dashed = [ln for ln in dot.splitlines() if "style=dashed" in ln]
        assert len(dashed) == 13

    def test_label_escaping(self, schema):
        kg = KnowledgeGraph(schema)
        kg.upsert_entity("Malware", 'Say "hi"')
        assert 'label="Say \\"hi\\""' in export_dot(kg)

    def test_corpus_deterministic(self, schema):
        assert export_dot(build_corpus_graph(schema)) == \
            export_dot(build_corpus_graph(schema))
