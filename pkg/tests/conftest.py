from pathlib import Path

import pytest

from malkg.brat import load_corpus
from malkg.ontology import default_schema
from malkg.store import KnowledgeGraph

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS_DIR = FIXTURES / "corpus"


def build_corpus_graph(schema) -> KnowledgeGraph:
    kg = KnowledgeGraph(schema)
    results, stats = load_corpus(CORPUS_DIR, schema)
    assert not stats.errors, stats.errors
    for doc, triples in results:
        kg.ingest_document(doc.doc_id, triples)
    return kg


@pytest.fixture(scope="session")
def schema():
    return default_schema()


@pytest.fixture()
def corpus_graph(schema):
    return build_corpus_graph(schema)
