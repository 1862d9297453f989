/**
 * Client view state: the held graph document plus selection, filters, and
 * query history.
 *
 * Merging is a duplicate-free union keyed on node id and edge
 * (source, relation, target), so replaying the same responses in any order
 * settles on the same graph. Filters are applied on read and never touch
 * the held document or the server.
 */

import { edgeKey } from './types.js';
import type { GraphDocument, GraphEdge, GraphNode } from './types.js';

export type Selection =
  | { kind: 'node'; id: string }
  | { kind: 'edge'; key: string };

export interface Filters {
  /** null means "all relations". */
  relations: Set<string> | null;
  includeInferred: boolean;
  minConfidence: number;
}

export interface MergeDelta {
  addedNodes: number;
  addedEdges: number;
}

export class ViewState {
  private nodeIndex = new Map<string, GraphNode>();
  private edgeIndex = new Map<string, GraphEdge>();
  selection: Selection | null = null;
  expansionDepth = 1;
  filters: Filters = { relations: null, includeInferred: true, minConfidence: 0 };
  history: string[] = [];

  /** The held graph document; nodes and edges in stable insertion order. */
  get graph(): GraphDocument {
    return {
      nodes: [...this.nodeIndex.values()],
      edges: [...this.edgeIndex.values()],
    };
  }

  get isEmpty(): boolean {
    return this.nodeIndex.size === 0;
  }

  node(id: string): GraphNode | undefined {
    return this.nodeIndex.get(id);
  }

  edge(key: string): GraphEdge | undefined {
    return this.edgeIndex.get(key);
  }

  /** Union a fetched document into the view; returns what was new. */
  merge(doc: GraphDocument): MergeDelta {
    let addedNodes = 0;
    let addedEdges = 0;
    for (const node of doc.nodes) {
      if (!this.nodeIndex.has(node.id)) addedNodes += 1;
      this.nodeIndex.set(node.id, node);
    }
    for (const edge of doc.edges) {
      const key = edgeKey(edge);
      if (!this.edgeIndex.has(key)) addedEdges += 1;
      this.edgeIndex.set(key, edge);
    }
    return { addedNodes, addedEdges };
  }

  clear(): void {
    this.nodeIndex.clear();
    this.edgeIndex.clear();
    this.selection = null;
  }

  remember(query: string): void {
    if (query && this.history[this.history.length - 1] !== query) {
      this.history.push(query);
    }
  }

  /** The held document with edge filters applied; pure, repeatable. */
  visible(): GraphDocument {
    const { relations, includeInferred, minConfidence } = this.filters;
    const edges = [...this.edgeIndex.values()].filter(
      (edge) =>
        (includeInferred || !edge.inferred) &&
        edge.confidence >= minConfidence &&
        (relations === null || relations.has(edge.relation)),
    );
    return { nodes: [...this.nodeIndex.values()], edges };
  }

  select(selection: Selection | null): void {
    if (selection?.kind === 'node' && !this.nodeIndex.has(selection.id)) return;
    if (selection?.kind === 'edge' && !this.edgeIndex.has(selection.key)) return;
    this.selection = selection;
  }
}
