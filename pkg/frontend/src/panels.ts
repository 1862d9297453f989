/**
 * DOM builders for the side panels: selection details, path results,
 * status notices, and query history.
 */

import type { EntityDetail, GraphEdge, GraphNode, PathSequence } from './types.js';

function field(label: string, value: string): HTMLElement {
  const row = document.createElement('div');
  row.className = 'detail-row';
  const dt = document.createElement('span');
  dt.className = 'detail-label';
  dt.textContent = label;
  const dd = document.createElement('span');
  dd.className = 'detail-value';
  dd.textContent = value;
  row.append(dt, dd);
  return row;
}

export function renderNodeDetail(
  container: HTMLElement,
  node: GraphNode,
  detail: EntityDetail | null,
  onOpenReport: (reportId: string) => void,
): void {
  container.textContent = '';
  const heading = document.createElement('h3');
  heading.textContent = node.label;
  container.appendChild(heading);
  container.appendChild(field('class', node.class));
  container.appendChild(field('id', node.id));
  if (node.aliases.length > 0) {
    container.appendChild(field('aliases', node.aliases.join(', ')));
  }
  if (detail) {
    for (const [name, value] of Object.entries(detail.attributes)) {
      container.appendChild(field(name, value));
    }
    container.appendChild(
      field('degree', `${detail.degree.out} out / ${detail.degree.in} in`),
    );
    if (detail.reports.length > 0) {
      container.appendChild(reportLinks(detail.reports, onOpenReport));
    }
  }
}

export function renderEdgeDetail(
  container: HTMLElement,
  edge: GraphEdge,
  describe: (id: string) => string,
  onOpenReport: (reportId: string) => void,
): void {
  container.textContent = '';
  const heading = document.createElement('h3');
  heading.textContent = edge.relation;
  if (edge.inferred) {
    const badge = document.createElement('span');
    badge.className = 'badge badge-inferred';
    badge.textContent = 'inferred';
    heading.appendChild(badge);
  }
  container.appendChild(heading);
  container.appendChild(field('from', describe(edge.source)));
  container.appendChild(field('to', describe(edge.target)));
  container.appendChild(field('confidence', edge.confidence.toFixed(2)));
  if (edge.reports.length > 0) {
    container.appendChild(reportLinks(edge.reports, onOpenReport));
  } else if (edge.inferred) {
    container.appendChild(field('derived by', 'inference'));
  }
}

function reportLinks(reports: string[], onOpenReport: (reportId: string) => void): HTMLElement {
  const row = document.createElement('div');
  row.className = 'detail-row';
  const label = document.createElement('span');
  label.className = 'detail-label';
  label.textContent = 'reports';
  row.appendChild(label);
  const list = document.createElement('span');
  list.className = 'detail-value report-links';
  reports.forEach((reportId, index) => {
    if (index > 0) list.appendChild(document.createTextNode(', '));
    const link = document.createElement('a');
    link.href = '#';
    link.dataset.report = reportId;
    link.textContent = reportId;
    link.addEventListener('click', (event) => {
      event.preventDefault();
      onOpenReport(reportId);
    });
    list.appendChild(link);
  });
  row.appendChild(list);
  return row;
}

export function renderPathList(
  container: HTMLElement,
  paths: PathSequence[],
  describe: (id: string) => string,
): void {
  container.textContent = '';
  if (paths.length === 0) return;
  const list = document.createElement('ol');
  list.className = 'path-list';
  for (const path of paths) {
    const item = document.createElement('li');
    const pieces: string[] = [];
    for (let i = 0; i < path.length; i += 1) {
      pieces.push(i % 2 === 0 ? describe(path[i]) : `-[${path[i]}]->`);
    }
    item.textContent = pieces.join(' ');
    list.appendChild(item);
  }
  container.appendChild(list);
}

export type NoticeKind = 'info' | 'warning' | 'error';

export function renderNotice(
  container: HTMLElement,
  kind: NoticeKind,
  message: string,
  onRetry?: () => void,
): void {
  container.textContent = '';
  const banner = document.createElement('div');
  banner.className = `notice notice-${kind}`;
  banner.textContent = message;
  if (onRetry) {
    const retry = document.createElement('button');
    retry.type = 'button';
    retry.className = 'retry';
    retry.textContent = 'retry';
    retry.addEventListener('click', onRetry);
    banner.appendChild(retry);
  }
  container.appendChild(banner);
}

export function clearNotice(container: HTMLElement): void {
  container.textContent = '';
}

export function renderHistory(
  container: HTMLElement,
  history: string[],
  onReplay: (query: string) => void,
): void {
  container.textContent = '';
  const list = document.createElement('ul');
  list.className = 'history';
  for (const query of [...history].reverse()) {
    const item = document.createElement('li');
    const link = document.createElement('a');
    link.href = '#';
    link.textContent = query;
    link.addEventListener('click', (event) => {
      event.preventDefault();
      onReplay(query);
    });
    item.appendChild(link);
    list.appendChild(item);
  }
  container.appendChild(list);
}
