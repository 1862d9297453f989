"""Schema loading, hierarchy queries, and type validation."""

import pytest

from malkg.errors import SchemaError, UnknownClassError, UnknownRelationError
from malkg.ontology import (
    ClassDef,
    RelationDef,
    build_schema,
    default_schema,
    export_brat_config,
    load_schema,
    serialize_schema,
)


@pytest.fixture(scope="module")
def schema():
    return default_schema()


class TestDefaultSchema:
    def test_roster_size(self, schema):
        assert len(schema.classes) >= 14
        assert len(schema.relations) >= 10

    def test_core_classes_present(self, schema):
        for name in ("Malware", "Vulnerability", "Indicator", "Hash",
                     "Organization", "Application", "Platform", "Date"):
            assert schema.has_class(name), name

    def test_core_relations_present(self, schema):
        for name in ("hasAlias", "targets", "exploits", "hasHash",
                     "firstSeenOn", "variantOf", "communicatesWith"):
            assert schema.has_relation(name), name

    def test_hash_is_indicator(self, schema):
        assert schema.is_subclass("Hash", "Indicator")
        assert not schema.is_subclass("Indicator", "Hash")

    def test_alias_covers_malware(self, schema):
        rel = schema.relations["hasAlias"]
        assert "Malware" in rel.domain
        assert "Malware" in rel.range
        assert rel.symmetric

    def test_expected_relations_inherited(self, schema):
        # Hash inherits whatever Indicator expects on top of its own list.
        assert "firstSeenOn" in schema.expected_relations("Hash")
        assert schema.expected_relations("Malware") == {"hasHash", "targets"}

    def test_descendants(self, schema):
        subs = schema.descendants("Indicator")
        assert {"Hash", "IPAddress", "DomainName", "URL"} <= set(subs)
        assert "Malware" not in subs


class TestHierarchy:
    def test_is_subclass_reflexive(self, schema):
        for name in schema.classes:
            assert schema.is_subclass(name, name)

    def test_is_subclass_antisymmetric(self, schema):
        for a in schema.classes:
            for b in schema.classes:
                if a != b and schema.is_subclass(a, b):
                    assert not schema.is_subclass(b, a)

    def test_ancestors_unknown_class(self, schema):
        with pytest.raises(UnknownClassError):
            schema.ancestors("Nonsense")


class TestValidateTripleTypes:
    def test_valid(self, schema):
        assert schema.validate_triple_types("Malware", "hasAlias", "Malware") is None
        assert schema.validate_triple_types("Hash", "firstSeenOn", "Date") is None

    def test_subclass_satisfies_domain(self, schema):
        # Hash is not listed on firstSeenOn directly; Indicator is.
        assert "Hash" not in schema.relations["firstSeenOn"].domain
        assert schema.validate_triple_types("Hash", "firstSeenOn", "Date") is None

    def test_domain_violation(self, schema):
        msg = schema.validate_triple_types("Date", "targets", "Malware")
        assert msg is not None
        assert "domain violation" in msg
        assert "Date" in msg and "targets" in msg

    def test_range_violation(self, schema):
        msg = schema.validate_triple_types("Malware", "targets", "Vulnerability")
        assert msg is not None
        assert "range violation" in msg

    def test_domain_checked_before_range(self, schema):
        # Both ends wrong: the domain complaint wins.
        msg = schema.validate_triple_types("Date", "targets", "Date")
        assert "domain violation" in msg

    def test_unknown_relation(self, schema):
        with pytest.raises(UnknownRelationError):
            schema.validate_triple_types("Malware", "bogusRel", "Malware")

    def test_unknown_class(self, schema):
        with pytest.raises(UnknownClassError):
            schema.validate_triple_types("Bogus", "targets", "Malware")


class TestBuildValidation:
    def _classes(self):
        return [ClassDef("A"), ClassDef("B", parent="A")]

    def test_duplicate_class(self):
        with pytest.raises(SchemaError, match="duplicate class"):
            build_schema([ClassDef("A"), ClassDef("A")], [])

    def test_unknown_parent(self):
        with pytest.raises(SchemaError, match="unknown parent"):
            build_schema([ClassDef("A", parent="Ghost")], [])

    def test_cycle(self):
        classes = [ClassDef("A", parent="B"), ClassDef("B", parent="A")]
        with pytest.raises(SchemaError, match="cyclic"):
            build_schema(classes, [])

    def test_self_parent(self):
        with pytest.raises(SchemaError, match="cyclic"):
            build_schema([ClassDef("A", parent="A")], [])

    def test_empty_domain(self):
        rel = RelationDef("r", domain=frozenset(), range=frozenset({"A"}))
        with pytest.raises(SchemaError, match="domain"):
            build_schema(self._classes(), [rel])

    def test_unknown_range_class(self):
        rel = RelationDef("r", domain=frozenset({"A"}), range=frozenset({"Ghost"}))
        with pytest.raises(SchemaError, match="Ghost"):
            build_schema(self._classes(), [rel])

    def test_inverse_must_exist(self):
        rel = RelationDef("r", domain=frozenset({"A"}), range=frozenset({"A"}),
                          inverse_of="missing")
        with pytest.raises(SchemaError, match="inverse"):
            build_schema(self._classes(), [rel])

    def test_inverse_must_be_mutual(self):
        a = frozenset({"A"})
        r = RelationDef("r", domain=a, range=a, inverse_of="s")
        s = RelationDef("s", domain=a, range=a, inverse_of=None)
        with pytest.raises(SchemaError, match="does not name 'r' back"):
            build_schema(self._classes(), [r, s])

    def test_inverse_must_mirror_types(self):
        a, b = frozenset({"A"}), frozenset({"B"})
        r = RelationDef("r", domain=a, range=b, inverse_of="s")
        s = RelationDef("s", domain=a, range=b, inverse_of="r")
        with pytest.raises(SchemaError, match="mirror"):
            build_schema(self._classes(), [r, s])

    def test_symmetric_excludes_inverse(self):
        a = frozenset({"A"})
        r = RelationDef("r", domain=a, range=a, symmetric=True, inverse_of="s")
        s = RelationDef("s", domain=a, range=a, inverse_of="r")
        with pytest.raises(SchemaError, match="symmetric"):
            build_schema(self._classes(), [r, s])

    def test_unknown_expects(self):
        classes = [ClassDef("A", expects=frozenset({"ghostRel"}))]
        with pytest.raises(SchemaError, match="ghostRel"):
            build_schema(classes, [])


class TestLoadDocument:
    def test_not_a_mapping(self):
        with pytest.raises(SchemaError):
            load_schema("- just\n- a list\n")

    def test_missing_classes_key(self):
        with pytest.raises(SchemaError):
            load_schema("version: x\nrelations: []\n")

    def test_minimal_document(self):
        doc = (
            "version: t1\n"
            "classes:\n"
            "  - name: Thing\n"
            "relations:\n"
            "  - name: rel\n"
            "    domain: [Thing]\n"
            "    range: [Thing]\n"
        )
        schema = load_schema(doc)
        assert schema.version == "t1"
        assert schema.has_class("Thing")
        assert schema.has_relation("rel")


class TestRoundTrip:
    def test_serialize_then_load_is_identity(self, schema):
        again = load_schema(serialize_schema(schema))
        assert again == schema

    def test_round_trip_twice_is_stable(self, schema):
        once = serialize_schema(schema)
        assert serialize_schema(load_schema(once)) == once


class TestBratConfig:
    def test_one_entity_line_per_class(self, schema):
        conf = export_brat_config(schema)
        lines = conf.splitlines()
        start = lines.index("[entities]") + 1
        end = lines.index("[relations]")
        entity_lines = [ln for ln in lines[start:end] if ln.strip()]
        assert entity_lines == list(schema.classes)

    def test_relation_args_expand_subclasses(self, schema):
        conf = export_brat_config(schema)
        line = next(ln for ln in conf.splitlines() if ln.startswith("firstSeenOn\t"))
        # Indicator in the declared domain pulls its subclasses into Arg1.
        assert "Hash" in line and "Arg2:Date" in line

    def test_empty_relations_section(self):
        schema = build_schema([ClassDef("Solo")], [])
        conf = export_brat_config(schema)
        assert "[relations]" in conf
        assert "[events]" in conf
        assert conf.endswith("\n")
