"""Schema layer: class hierarchy, relation constraints, annotation-tool config.

The schema is loaded once from a YAML document and treated as immutable
afterwards, so it can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import yaml

from .errors import SchemaError, UnknownClassError, UnknownRelationError


@dataclass(frozen=True)
class ClassDef:
    name: str
    parent: str | None = None
    expects: frozenset[str] = frozenset()
    description: str = ""


@dataclass(frozen=True)
class RelationDef:
    name: str
    domain: frozenset[str]
    range: frozenset[str]
    inverse_of: str | None = None
    symmetric: bool = False
    transitive: bool = False


@dataclass(frozen=True)
class Schema:
    """Validated class/relation vocabulary. Immutable after construction."""

    classes: dict[str, ClassDef]
    relations: dict[str, RelationDef]
    version: str = ""

    def has_class(self, name: str) -> bool:
        return name in self.classes

    def has_relation(self, name: str) -> bool:
        return name in self.relations

    def ancestors(self, name: str) -> list[str]:
        """Ancestor class names of ``name``, nearest first, excluding itself."""
        if name not in self.classes:
            raise UnknownClassError(f"unknown class {name!r}")
        out: list[str] = []
        cur = self.classes[name].parent
        while cur is not None:
            out.append(cur)
            cur = self.classes[cur].parent
        return out

    def is_subclass(self, a: str, b: str) -> bool:
        """True iff ``a`` equals ``b`` or ``b`` is reachable via parent links."""
        if a not in self.classes:
            raise UnknownClassError(f"unknown class {a!r}")
        if b not in self.classes:
            raise UnknownClassError(f"unknown class {b!r}")
        return a == b or b in self.ancestors(a)

    def descendants(self, name: str) -> list[str]:
        """All classes at or below ``name`` in the hierarchy, in schema order."""
        if name not in self.classes:
            raise UnknownClassError(f"unknown class {name!r}")
        return [c for c in self.classes if self.is_subclass(c, name)]

    def expected_relations(self, class_name: str) -> frozenset[str]:
        """Expected relations for a class, inherited from all ancestors."""
        if class_name not in self.classes:
            raise UnknownClassError(f"unknown class {class_name!r}")
        expected = set(self.classes[class_name].expects)
        for anc in self.ancestors(class_name):
            expected |= self.classes[anc].expects
        return frozenset(expected)

    def validate_triple_types(self, head_class: str, relation: str, tail_class: str) -> str | None:
        """Return None when the typing is valid, else a violation description.

        Valid means the head class is a subclass of some domain class of the
        relation and the tail class a subclass of some range class.
        """
        if relation not in self.relations:
            raise UnknownRelationError(f"unknown relation {relation!r}")
        rel = self.relations[relation]
        if not any(self.is_subclass(head_class, d) for d in rel.domain):
            return (
                f"domain violation: {head_class} is not a subclass of any of "
                f"{sorted(rel.domain)} (relation {relation})"
            )
        if not any(self.is_subclass(tail_class, r) for r in rel.range):
            return (
                f"range violation: {tail_class} is not a subclass of any of "
                f"{sorted(rel.range)} (relation {relation})"
            )
        return None


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaError(message)


def build_schema(classes: list[ClassDef], relations: list[RelationDef], version: str = "") -> Schema:
    """Assemble and validate a schema, reporting the offending name on failure."""
    class_map: dict[str, ClassDef] = {}
    for c in classes:
        _require(bool(c.name), "class with empty name")
        _require(c.name not in class_map, f"duplicate class name {c.name!r}")
        class_map[c.name] = c

    for c in class_map.values():
        if c.parent is not None:
            _require(c.parent in class_map, f"class {c.name!r}: unknown parent {c.parent!r}")

    # hierarchy must be acyclic (a self-parent is the smallest cycle)
    for name in class_map:
        seen = {name}
        cur = class_map[name].parent
        while cur is not None:
            _require(cur not in seen, f"cyclic hierarchy involving class {name!r}")
            seen.add(cur)
            cur = class_map[cur].parent

    rel_map: dict[str, RelationDef] = {}
    for r in relations:
        _require(bool(r.name), "relation with empty name")
        _require(r.name not in rel_map, f"duplicate relation name {r.name!r}")
        rel_map[r.name] = r

    for r in rel_map.values():
        _require(bool(r.domain), f"relation {r.name!r}: empty domain")
        _require(bool(r.range), f"relation {r.name!r}: empty range")
        for cname in sorted(r.domain):
            _require(cname in class_map, f"relation {r.name!r}: unknown domain class {cname!r}")
        for cname in sorted(r.range):
            _require(cname in class_map, f"relation {r.name!r}: unknown range class {cname!r}")
        if r.inverse_of is not None:
            _require(not (r.symmetric and r.inverse_of != r.name),
                     f"symmetric relation {r.name!r} declares a distinct inverse")
            _require(r.inverse_of in rel_map,
                     f"relation {r.name!r}: unknown inverse {r.inverse_of!r}")
            inv = rel_map[r.inverse_of]
            _require(inv.inverse_of == r.name,
                     f"asymmetric inverse declaration: {r.name!r} names {r.inverse_of!r} "
                     f"but {r.inverse_of!r} does not name {r.name!r} back")
            _require(r.domain == inv.range and r.range == inv.domain,
                     f"inverse pair {r.name!r}/{r.inverse_of!r}: domain/range do not mirror")

    for c in class_map.values():
        for exp in sorted(c.expects):
            _require(exp in rel_map, f"class {c.name!r}: unknown expected relation {exp!r}")

    return Schema(classes=class_map, relations=rel_map, version=version)


def _as_str_list(value, where: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{where}: expected a list of strings")
    return value


def load_schema(document: str) -> Schema:
    """Parse and validate a schema document (YAML with classes/relations sections)."""
    try:
        data = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise SchemaError(f"malformed schema document: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("schema document must be a mapping with classes/relations")
    if "classes" not in data:
        raise SchemaError("schema document is missing the classes section")

    classes = []
    for i, entry in enumerate(data.get("classes") or []):
        if not isinstance(entry, dict) or "name" not in entry:
            raise SchemaError(f"classes[{i}]: each class entry needs a name")
        classes.append(ClassDef(
            name=str(entry["name"]),
            parent=entry.get("parent"),
            expects=frozenset(_as_str_list(entry.get("expects", []), f"classes[{i}].expects")),
            description=str(entry.get("description", "")),
        ))

    relations = []
    for i, entry in enumerate(data.get("relations") or []):
        if not isinstance(entry, dict) or "name" not in entry:
            raise SchemaError(f"relations[{i}]: each relation entry needs a name")
        relations.append(RelationDef(
            name=str(entry["name"]),
            domain=frozenset(_as_str_list(entry.get("domain", []), f"relations[{i}].domain")),
            range=frozenset(_as_str_list(entry.get("range", []), f"relations[{i}].range")),
            inverse_of=entry.get("inverse"),
            symmetric=bool(entry.get("symmetric", False)),
            transitive=bool(entry.get("transitive", False)),
        ))

    return build_schema(classes, relations, version=str(data.get("version", "")))


def load_schema_file(path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        return load_schema(fh.read())


def serialize_schema(schema: Schema) -> str:
    """Render a schema back to the document format accepted by load_schema."""
    doc: dict = {"version": schema.version, "classes": [], "relations": []}
    for c in schema.classes.values():
        entry: dict = {"name": c.name}
        if c.parent is not None:
            entry["parent"] = c.parent
        if c.expects:
            entry["expects"] = sorted(c.expects)
        if c.description:
            entry["description"] = c.description
        doc["classes"].append(entry)
    for r in schema.relations.values():
        entry = {"name": r.name, "domain": sorted(r.domain), "range": sorted(r.range)}
        if r.inverse_of is not None:
            entry["inverse"] = r.inverse_of
        if r.symmetric:
            entry["symmetric"] = True
        if r.transitive:
            entry["transitive"] = True
        doc["relations"].append(entry)
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True)


@lru_cache(maxsize=1)
def default_schema() -> Schema:
    """The bundled schema covering the core Android-malware CTI vocabulary."""
    text = resources.files("malkg.data").joinpath("malont_lite.yaml").read_text(encoding="utf-8")
    return load_schema(text)


def export_brat_config(schema: Schema) -> str:
    """Emit annotation-tool type configuration for the schema.

    Entity types appear one per line; relation lines list the permitted
    argument classes with subclasses expanded, since the flat entity list
    carries no hierarchy.
    """
    lines = ["[entities]"]
    lines.extend(schema.classes)
    lines.append("")
    lines.append("[relations]")
    for rel in schema.relations.values():
        arg1 = sorted({d for c in rel.domain for d in schema.descendants(c)})
        arg2 = sorted({d for c in rel.range for d in schema.descendants(c)})
        lines.append(f"{rel.name}\tArg1:{'|'.join(arg1)}, Arg2:{'|'.join(arg2)}")
    lines.append("")
    lines.append("[events]")
    lines.append("")
    lines.append("[attributes]")
    return "\n".join(lines) + "\n"
