"""Analyst queries over a materialized graph: search, hops, paths, gaps, similarity."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import product

from .errors import ThresholdError, UnknownClassError, UnknownEntityError
from .ontology import Schema
from .store import Entity, KnowledgeGraph, Triple


@dataclass
class Subgraph:
    nodes: list[Entity]
    edges: list[Triple]
    root: str | None = None


@dataclass
class PathResult:
    paths: list[list[str]]  # alternating entity id, relation name, entity id, ...
    length: int


@dataclass
class SimilarityResult:
    class_name: str
    threshold: float
    clusters: list[list[str]]
    scores: list[tuple[str, str, float]]


def _filtered_triples(kg: KnowledgeGraph, include_inferred: bool,
                      relations: set[str] | None = None) -> list[Triple]:
    out = []
    for triple in kg.iter_triples(include_inferred=include_inferred):
        if relations is not None and triple.relation not in relations:
            continue
        out.append(triple)
    return out


def _adjacency(triples, directed: bool = False) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {}
    for t in triples:
        adj.setdefault(t.head, set()).add(t.tail)
        if not directed:
            adj.setdefault(t.tail, set()).add(t.head)
    return adj


def _distances(adj, start: str, limit: int | None = None) -> dict[str, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if limit is not None and dist[node] >= limit:
            continue
        for nxt in sorted(adj.get(node, ())):
            if nxt not in dist:
                dist[nxt] = dist[node] + 1
                queue.append(nxt)
    return dist


# -- entity search ----------------------------------------------------------

def _match_rank(names, needle: str) -> int | None:
    rank = None
    for name in names:
        folded = name.casefold()
        if folded == needle:
            return 0
        if folded.startswith(needle):
            rank = 1 if rank is None else min(rank, 1)
        elif needle in folded:
            rank = 2 if rank is None else min(rank, 2)
    return rank


def find_entity(kg: KnowledgeGraph, q: str, class_name: str | None = None,
                limit: int | None = None) -> list[Entity]:
    """Ranked substring search over names and aliases.

    Exact beats prefix beats substring; alias clusters collapse to one
    result, the member with the lowest id.
    """
    needle = q.strip().casefold()
    if not needle:
        return []
    ranked: dict[str, int] = {}
    for ent_id in sorted(kg.entities):
        ent = kg.entities[ent_id]
        if class_name is not None and ent.class_name != class_name:
            continue
        rank = _match_rank(ent.names(), needle)
        if rank is not None:
            ranked[ent_id] = rank
    results = []
    claimed: set[str] = set()
    for ent_id in ranked:
        if ent_id in claimed:
            continue
        cluster = kg.alias_cluster(ent_id)
        if class_name is not None:
            cluster = {c for c in cluster if kg.entities[c].class_name == class_name}
        claimed |= cluster
        representative = kg.entities[min(cluster)]
        rank = min(ranked[c] for c in cluster if c in ranked)
        results.append((rank, representative.canonical_name.casefold(),
                        representative.id, representative))
    results.sort(key=lambda r: r[:3])
    found = [r[3] for r in results]
    return found[:limit] if limit is not None else found


# -- neighborhood and paths -------------------------------------------------

def neighborhood(kg: KnowledgeGraph, entity_id: str, hops: int = 1,
                 include_inferred: bool = True,
                 relations: set[str] | None = None) -> Subgraph:
    """Everything within `hops` undirected steps, plus the edges that some
    walk of at most `hops` steps from the root can traverse."""
    kg.entity(entity_id)
    triples = _filtered_triples(kg, include_inferred, relations)
    dist = _distances(_adjacency(triples), entity_id, limit=hops)
    included = {n for n, d in dist.items() if d <= hops}
    included.add(entity_id)
    edges = [t for t in triples
             if t.head in included and t.tail in included
             and min(dist[t.head], dist[t.tail]) + 1 <= hops]
    nodes = [kg.entities[i] for i in sorted(included)]
    return Subgraph(nodes=nodes, edges=edges, root=entity_id)


def shortest_paths(kg: KnowledgeGraph, start: str, goal: str, max_len: int = 6,
                   directed: bool = False,
                   include_inferred: bool = True) -> PathResult | None:
    """All minimal-length paths between two entities, or None when apart.

    Paths alternate entity ids and relation names and are ordered
    lexicographically by their (relation, node) sequence.
    """
    kg.entity(start)
    kg.entity(goal)
    if start == goal:
        return PathResult(paths=[[start]], length=0)
    triples = _filtered_triples(kg, include_inferred)
    adj = _adjacency(triples, directed=directed)
    dist = _distances(adj, start, limit=max_len)
    if goal not in dist or dist[goal] > max_len:
        return None

    labels: dict[tuple[str, str], set[str]] = {}
    for t in triples:
        labels.setdefault((t.head, t.tail), set()).add(t.relation)
        if not directed:
            labels.setdefault((t.tail, t.head), set()).add(t.relation)

    node_paths: list[list[str]] = []

    def extend(path: list[str]) -> None:
        node = path[-1]
        if node == goal:
            node_paths.append(path)
            return
        for nxt in adj.get(node, ()):
            if dist.get(nxt) == dist[node] + 1 and dist[nxt] <= dist[goal]:
                extend(path + [nxt])

    extend([start])

    rendered: set[tuple[str, ...]] = set()
    for nodes in node_paths:
        hops = [sorted(labels[(a, b)]) for a, b in zip(nodes, nodes[1:])]
        for combo in product(*hops):
            path: list[str] = [nodes[0]]
            for relation, node in zip(combo, nodes[1:]):
                path.extend((relation, node))
            rendered.add(tuple(path))
    ordered = sorted(rendered, key=lambda p: tuple(zip(p[1::2], p[2::2])))
    return PathResult(paths=[list(p) for p in ordered], length=dist[goal])


def report_subgraph(kg: KnowledgeGraph, report_id: str) -> Subgraph:
    """The triples carrying a provenance entry for one report."""
    edges = kg.triples_for_report(report_id)
    node_ids = sorted({e.head for e in edges} | {e.tail for e in edges})
    return Subgraph(nodes=[kg.entities[i] for i in node_ids], edges=edges)


# -- competency-question queries --------------------------------------------

def _class_members(kg: KnowledgeGraph, schema: Schema, class_name: str) -> list[Entity]:
    if not schema.has_class(class_name):
        raise UnknownClassError(f"unknown class {class_name!r}")
    wanted = {class_name, *schema.descendants(class_name)}
    return [kg.entities[i] for i in sorted(kg.entities)
            if kg.entities[i].class_name in wanted]


def missing_intelligence(kg: KnowledgeGraph, schema: Schema,
                         class_name: str) -> list[tuple[Entity, set[str]]]:
    """Entities of the class missing some of its expected relations.

    Presence counts asserted or inferred outgoing edges; sorted most-gaps
    first, then by name.
    """
    expected = schema.expected_relations(class_name)
    if not expected:
        return []
    gaps = []
    for ent in _class_members(kg, schema, class_name):
        outgoing = {t.relation for t in kg.outgoing_triples(ent.id)}
        missing = expected - outgoing
        if missing:
            gaps.append((ent, missing))
    gaps.sort(key=lambda g: (-len(g[1]), g[0].canonical_name.casefold(), g[0].id))
    return gaps


def similar_entities(kg: KnowledgeGraph, class_name: str, threshold: float,
                     generalize_tails: bool = False) -> SimilarityResult:
    """Jaccard similarity over asserted outgoing (relation, tail) features,
    single-linkage clusters at the given threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ThresholdError(f"threshold {threshold} outside [0, 1]")
    members = _class_members(kg, kg.schema, class_name)
    features: dict[str, set] = {}
    for ent in members:
        feats = set()
        for triple in kg.outgoing_triples(ent.id):
            if triple.inferred:
                continue
            tail = triple.tail
            if generalize_tails:
                tail = kg.entities[tail].class_name
            feats.add((triple.relation, tail))
        features[ent.id] = feats

    ids = [e.id for e in members]
    parent = {i: i for i in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    scores = []
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            union = features[a] | features[b]
            score = len(features[a] & features[b]) / len(union) if union else 0.0
            if score > 0.0:
                scores.append((a, b, score))
            if score >= threshold:
                parent[find(a)] = find(b)

    groups: dict[str, list[str]] = {}
    for i in ids:
        groups.setdefault(find(i), []).append(i)
    clusters = sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])
    scores.sort(key=lambda s: (-s[2], s[0], s[1]))
    return SimilarityResult(class_name=class_name, threshold=threshold,
                            clusters=clusters, scores=scores)


def resolve_entity_ref(kg: KnowledgeGraph, ref: str,
                       class_name: str | None = None) -> Entity:
    """Accepts an entity id or a name; names go through ranked search."""
    ref = ref.strip()
    if ref in kg.entities:
        return kg.entities[ref]
    matches = find_entity(kg, ref, class_name=class_name)
    if not matches:
        raise UnknownEntityError(f"no entity matching {ref!r}")
    return matches[0]
