/**
 * Wire types for the malkg HTTP API.
 *
 * These mirror the JSON payloads documented in the repository's FORMATS.md;
 * nothing here is invented client-side.
 */

export interface GraphNode {
  id: string;
  label: string;
  class: string;
  aliases: string[];
}

export interface GraphEdge {
  source: string;
  target: string;
  relation: string;
  inferred: boolean;
  confidence: number;
  /** Contributing report ids; empty for inferred edges. */
  reports: string[];
}

export interface GraphDocument {
  nodes: GraphNode[];
  edges: GraphEdge[];
  root?: string;
}

export interface SearchResult {
  query: string;
  class: string | null;
  matches: GraphNode[];
}

export interface EntityDetail extends GraphNode {
  attributes: Record<string, string>;
  degree: { out: number; in: number; by_relation: Record<string, number> };
  reports: string[];
}

/** Paths alternate entity id, relation name, entity id, ... */
export type PathSequence = string[];

export interface PathResult {
  from: string;
  to: string;
  length: number | null;
  paths: PathSequence[];
  nodes: GraphNode[];
}

export interface SchemaClass {
  name: string;
  parent: string | null;
  expects: string[];
}

export interface SchemaRelation {
  name: string;
  domain: string[];
  range: string[];
  inverse_of: string | null;
  symmetric: boolean;
  transitive: boolean;
}

export interface SchemaDocument {
  version: string;
  classes: SchemaClass[];
  relations: SchemaRelation[];
}

export interface StatsDocument {
  entities: number;
  triples: { total: number; asserted: number; inferred: number };
  classes: Record<string, number>;
  relations: Record<string, number>;
  reports: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}

/** Stable identity of an edge within a graph document. */
export function edgeKey(edge: Pick<GraphEdge, 'source' | 'relation' | 'target'>): string {
  return `${edge.source} ${edge.relation} ${edge.target}`;
}
