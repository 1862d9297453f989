/**
 * SVG rendering of the filtered view.
 *
 * Rendering is a pure projection: every circle and line corresponds to a
 * node or edge in the document it was given, nothing more. Inferred edges
 * draw dashed; path-highlighted elements get a stronger stroke.
 */

import { edgeKey } from './types.js';
import type { GraphDocument, GraphEdge, GraphNode } from './types.js';
import type { Point } from './layout.js';
import type { Selection } from './state.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

const PALETTE = [
  '#4e79a7', '#f28e2b', '#e15759', '#76b7b2', '#59a14f', '#edc948',
  '#b07aa1', '#ff9da7', '#9c755f', '#bab0ac', '#1f77b4', '#d62728',
  '#2ca02c', '#9467bd', '#8c564b', '#e377c2', '#7f7f7f', '#bcbd22',
  '#17becf', '#aec7e8',
];

/** Stable class -> color assignment following the schema's class order. */
export function classPalette(classNames: string[]): Map<string, string> {
  const colors = new Map<string, string>();
  classNames.forEach((name, index) => {
    colors.set(name, PALETTE[index % PALETTE.length]);
  });
  return colors;
}

export interface Highlights {
  nodes: Set<string>;
  edges: Set<string>;
}

export const NO_HIGHLIGHTS: Highlights = { nodes: new Set(), edges: new Set() };

export interface RenderCallbacks {
  onSelectNode(node: GraphNode): void;
  onSelectEdge(edge: GraphEdge): void;
  onExpandNode(node: GraphNode): void;
}

export interface RenderOptions {
  colors: Map<string, string>;
  selection: Selection | null;
  highlights: Highlights;
  callbacks: RenderCallbacks;
}

function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [name, value] of Object.entries(attrs)) el.setAttribute(name, value);
  return el;
}

export function renderGraph(
  svg: SVGSVGElement,
  doc: GraphDocument,
  positions: Map<string, Point>,
  options: RenderOptions,
): void {
  svg.textContent = '';
  const { colors, selection, highlights, callbacks } = options;

  const edgeLayer = svgElement('g', { class: 'edges' });
  for (const edge of doc.edges) {
    const from = positions.get(edge.source);
    const to = positions.get(edge.target);
    if (!from || !to) continue;
    const key = edgeKey(edge);
    const highlighted = highlights.edges.has(key);
    const selected = selection?.kind === 'edge' && selection.key === key;
    const line = svgElement('line', {
      x1: String(from.x),
      y1: String(from.y),
      x2: String(to.x),
      y2: String(to.y),
      stroke: highlighted ? '#d62728' : selected ? '#111111' : '#9a9a9a',
      'stroke-width': highlighted || selected ? '3' : '1.5',
      'data-edge': key,
      'data-relation': edge.relation,
    });
    if (edge.inferred) line.setAttribute('stroke-dasharray', '6 4');
    line.addEventListener('click', (event) => {
      event.stopPropagation();
      callbacks.onSelectEdge(edge);
    });
    const title = svgElement('title', {});
    title.textContent = `${edge.relation} (${edge.inferred ? 'inferred' : 'asserted'}, ${edge.confidence})`;
    line.appendChild(title);
    edgeLayer.appendChild(line);

    const label = svgElement('text', {
      x: String((from.x + to.x) / 2),
      y: String((from.y + to.y) / 2 - 4),
      class: 'edge-label',
      'text-anchor': 'middle',
      'font-size': '9',
      fill: '#666666',
    });
    label.textContent = edge.relation;
    edgeLayer.appendChild(label);
  }
  svg.appendChild(edgeLayer);

  const nodeLayer = svgElement('g', { class: 'nodes' });
  for (const node of doc.nodes) {
    const at = positions.get(node.id);
    if (!at) continue;
    const highlighted = highlights.nodes.has(node.id);
    const selected = selection?.kind === 'node' && selection.id === node.id;
    const group = svgElement('g', { class: 'node', 'data-node': node.id });
    const circle = svgElement('circle', {
      cx: String(at.x),
      cy: String(at.y),
      r: selected ? '14' : '11',
      fill: colors.get(node.class) ?? '#888888',
      stroke: highlighted ? '#d62728' : selected ? '#111111' : '#ffffff',
      'stroke-width': highlighted || selected ? '3.5' : '1.5',
    });
    const title = svgElement('title', {});
    title.textContent = `${node.label} (${node.class})`;
    circle.appendChild(title);
    group.appendChild(circle);

    const label = svgElement('text', {
      x: String(at.x),
      y: String(at.y + 24),
      'text-anchor': 'middle',
      'font-size': '11',
      fill: '#222222',
    });
    label.textContent = node.label;
    group.appendChild(label);

    group.addEventListener('click', (event) => {
      event.stopPropagation();
      callbacks.onSelectNode(node);
    });
    group.addEventListener('dblclick', (event) => {
      event.stopPropagation();
      callbacks.onExpandNode(node);
    });
    nodeLayer.appendChild(group);
  }
  svg.appendChild(nodeLayer);
}

export function renderLegend(container: HTMLElement, colors: Map<string, string>): void {
  container.textContent = '';
  for (const [name, color] of colors) {
    const item = document.createElement('span');
    item.className = 'legend-item';
    const swatch = document.createElement('span');
    swatch.className = 'legend-swatch';
    swatch.style.backgroundColor = color;
    item.appendChild(swatch);
    item.appendChild(document.createTextNode(name));
    container.appendChild(item);
  }
}
