import type { GraphDocument, GraphEdge, GraphNode } from '../src/types.js';

export function node(id: string, label = id, className = 'Malware'): GraphNode {
  return { id, label, class: className, aliases: [] };
}

export function edge(
  source: string,
  relation: string,
  target: string,
  extra: Partial<GraphEdge> = {},
): GraphEdge {
  return {
    source,
    target,
    relation,
    inferred: false,
    confidence: 1.0,
    reports: ['r1'],
    ...extra,
  };
}

export function doc(nodes: GraphNode[], edges: GraphEdge[], root?: string): GraphDocument {
  return root === undefined ? { nodes, edges } : { nodes, edges, root };
}
