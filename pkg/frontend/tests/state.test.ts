import { describe, expect, it } from 'vitest';

import { ViewState } from '../src/state.js';
import { edgeKey } from '../src/types.js';
import { doc, edge, node } from './helpers.js';

const A = node('e1', 'Pegasus');
const B = node('e2', 'Chrysaor');
const C = node('e3', 'Android', 'Platform');
const AB = edge('e1', 'hasAlias', 'e2');
const AC = edge('e1', 'targets', 'e3');

describe('merge', () => {
  it('unions nodes and edges without duplicates', () => {
    const state = new ViewState();
    const first = state.merge(doc([A, B], [AB]));
    expect(first).toEqual({ addedNodes: 2, addedEdges: 1 });
    const second = state.merge(doc([B, C], [AB, AC]));
    expect(second).toEqual({ addedNodes: 1, addedEdges: 1 });
    expect(state.graph.nodes.map((n) => n.id)).toEqual(['e1', 'e2', 'e3']);
    expect(state.graph.edges).toHaveLength(2);
  });

  it('is idempotent', () => {
    const state = new ViewState();
    state.merge(doc([A, B], [AB]));
    const again = state.merge(doc([A, B], [AB]));
    expect(again).toEqual({ addedNodes: 0, addedEdges: 0 });
    expect(state.graph.nodes).toHaveLength(2);
    expect(state.graph.edges).toHaveLength(1);
  });

  it('settles on the same graph regardless of arrival order', () => {
    const docs = [doc([A, B], [AB]), doc([B, C], [AC]), doc([A, C], [AB, AC])];
    const forward = new ViewState();
    docs.forEach((d) => forward.merge(d));
    const backward = new ViewState();
    [...docs].reverse().forEach((d) => backward.merge(d));
    const shape = (s: ViewState) => ({
      nodes: [...s.graph.nodes].sort((x, y) => x.id.localeCompare(y.id)),
      edges: [...s.graph.edges].sort((x, y) => edgeKey(x).localeCompare(edgeKey(y))),
    });
    expect(shape(forward)).toEqual(shape(backward));
  });

  it('treats the same endpoints under different relations as distinct edges', () => {
    const state = new ViewState();
    state.merge(doc([A, B], [edge('e1', 'hasAlias', 'e2'), edge('e1', 'relatedTo', 'e2')]));
    expect(state.graph.edges).toHaveLength(2);
  });

  it('clear empties the view and drops the selection', () => {
    const state = new ViewState();
    state.merge(doc([A], []));
    state.select({ kind: 'node', id: 'e1' });
    state.clear();
    expect(state.isEmpty).toBe(true);
    expect(state.selection).toBeNull();
  });
});

describe('filters', () => {
  function populated(): ViewState {
    const state = new ViewState();
    state.merge(
      doc(
        [A, B, C],
        [
          edge('e1', 'hasAlias', 'e2', { confidence: 1.0 }),
          edge('e1', 'targets', 'e3', { inferred: true, confidence: 0.4, reports: [] }),
          edge('e2', 'targets', 'e3', { confidence: 0.6 }),
        ],
      ),
    );
    return state;
  }

  it('pass everything by default', () => {
    const state = populated();
    expect(state.visible().edges).toHaveLength(3);
    expect(state.visible().nodes).toHaveLength(3);
  });

  it('can hide inferred edges', () => {
    const state = populated();
    state.filters = { ...state.filters, includeInferred: false };
    expect(state.visible().edges.every((e) => !e.inferred)).toBe(true);
    expect(state.visible().edges).toHaveLength(2);
  });

  it('apply a confidence floor', () => {
    const state = populated();
    state.filters = { ...state.filters, minConfidence: 0.5 };
    expect(state.visible().edges.map((e) => e.confidence)).toEqual([1.0, 0.6]);
  });

  it('restrict to chosen relations', () => {
    const state = populated();
    state.filters = { ...state.filters, relations: new Set(['hasAlias']) };
    expect(state.visible().edges.map((e) => e.relation)).toEqual(['hasAlias']);
  });

  it('never mutate the held document', () => {
    const state = populated();
    const before = JSON.stringify(state.graph);
    state.filters = { relations: new Set(['targets']), includeInferred: false, minConfidence: 0.9 };
    state.visible();
    state.visible();
    expect(JSON.stringify(state.graph)).toBe(before);
  });
});

describe('selection and history', () => {
  it('ignores selections that are not in the view', () => {
    const state = new ViewState();
    state.merge(doc([A], []));
    state.select({ kind: 'node', id: 'ghost' });
    expect(state.selection).toBeNull();
    state.select({ kind: 'node', id: 'e1' });
    expect(state.selection).toEqual({ kind: 'node', id: 'e1' });
  });

  it('records queries once per consecutive run', () => {
    const state = new ViewState();
    state.remember('pegasus');
    state.remember('pegasus');
    state.remember('zitmo');
    state.remember('');
    expect(state.history).toEqual(['pegasus', 'zitmo']);
  });
});
