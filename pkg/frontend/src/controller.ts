/**
 * Explorer controller: wires the API client, view state, layout, and
 * renderers into a root element and implements the four analyst moves,
 * search-and-focus, node expansion, path queries, and inspection.
 *
 * The controller never invents graph facts: everything rendered arrived in
 * some fetched document, and filter changes re-render locally without
 * touching the server.
 */

import { ApiClient, ApiError } from './api.js';
import { ForceLayout } from './layout.js';
import {
  clearNotice,
  renderEdgeDetail,
  renderHistory,
  renderNodeDetail,
  renderNotice,
  renderPathList,
} from './panels.js';
import {
  classPalette,
  NO_HIGHLIGHTS,
  renderGraph,
  renderLegend,
} from './render.js';
import type { Highlights } from './render.js';
import { ViewState } from './state.js';
import type { Selection } from './state.js';
import { edgeKey } from './types.js';
import type { PathSequence } from './types.js';

export interface PathQueryOptions {
  maxLen?: number;
  directed?: boolean;
}

const MAX_PATH_LEN = 20;

export class ExplorerController {
  readonly state = new ViewState();
  readonly layout = new ForceLayout();
  private colors = new Map<string, string>();
  private highlights: Highlights = NO_HIGHLIGHTS;
  private readonly ui: {
    svg: SVGSVGElement;
    notices: HTMLElement;
    legend: HTMLElement;
    detail: HTMLElement;
    paths: HTMLElement;
    history: HTMLElement;
    status: HTMLElement;
    searchInput: HTMLInputElement;
    pathFrom: HTMLInputElement;
    pathTo: HTMLInputElement;
    pathMaxLen: HTMLInputElement;
    pathDirected: HTMLInputElement;
    filterInferred: HTMLInputElement;
    filterConfidence: HTMLInputElement;
    filterRelations: HTMLSelectElement;
    depth: HTMLInputElement;
  };

  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
  ) {
    this.ui = this.buildScaffold();
  }

  /** Fetch the schema legend; the explorer works degraded without it. */
  async init(): Promise<void> {
    try {
      const schema = await this.api.schema();
      this.colors = classPalette(schema.classes.map((c) => c.name));
      renderLegend(this.ui.legend, this.colors);
      this.ui.filterRelations.textContent = '';
      for (const relation of schema.relations) {
        const option = document.createElement('option');
        option.value = relation.name;
        option.textContent = relation.name;
        this.ui.filterRelations.appendChild(option);
      }
    } catch (err) {
      this.showError(err, () => this.init());
    }
  }

  /** Search, focus the top match, and render its neighborhood. */
  async searchAndFocus(query: string): Promise<void> {
    const q = query.trim();
    if (!q) return;
    clearNotice(this.ui.notices);
    try {
      const result = await this.api.search(q);
      if (result.matches.length === 0) {
        renderNotice(this.ui.notices, 'info', `no matches for "${q}"`);
        return;
      }
      const top = result.matches[0];
      const doc = await this.api.neighborhood(top.id, {
        hops: this.state.expansionDepth,
      });
      this.state.clear();
      this.layout.clear();
      this.highlights = NO_HIGHLIGHTS;
      this.state.merge(doc);
      this.state.remember(q);
      this.state.select({ kind: 'node', id: top.id });
      this.render();
      await this.inspect(this.state.selection);
    } catch (err) {
      this.showError(err, () => this.searchAndFocus(q));
    }
  }

  /** Fetch a node's 1-hop neighborhood and union it into the view. */
  async expandNode(nodeId: string): Promise<void> {
    clearNotice(this.ui.notices);
    try {
      const doc = await this.api.neighborhood(nodeId, { hops: 1 });
      this.state.merge(doc);
      this.render();
    } catch (err) {
      if (err instanceof ApiError && err.isNotFound) {
        renderNotice(
          this.ui.notices,
          'warning',
          'that node is no longer on the server; the view may be stale',
          () => this.refresh(),
        );
        return;
      }
      this.showError(err, () => this.expandNode(nodeId));
    }
  }

  /** Run a shortest-path query and highlight every minimal path. */
  async runPathQuery(from: string, to: string, options: PathQueryOptions = {}): Promise<void> {
    clearNotice(this.ui.notices);
    const maxLen = options.maxLen ?? 6;
    if (!Number.isInteger(maxLen) || maxLen < 1 || maxLen > MAX_PATH_LEN) {
      renderNotice(
        this.ui.notices,
        'warning',
        `max path length must be a whole number between 1 and ${MAX_PATH_LEN}`,
      );
      return;
    }
    if (!from.trim() || !to.trim()) {
      renderNotice(this.ui.notices, 'warning', 'both path endpoints are required');
      return;
    }
    try {
      const result = await this.api.paths(from.trim(), to.trim(), {
        maxLen,
        directed: options.directed,
      });
      this.state.remember(`${from.trim()} -> ${to.trim()}`);
      if (result.length === null) {
        this.highlights = NO_HIGHLIGHTS;
        renderPathList(this.ui.paths, [], (id) => this.describe(id));
        renderNotice(this.ui.notices, 'info', `no path from ${from} to ${to}`);
        this.render();
        return;
      }
      this.state.merge({ nodes: result.nodes, edges: [] });
      await this.fetchPathContext(result.paths);
      this.highlights = highlightsFor(result.paths);
      renderPathList(this.ui.paths, result.paths, (id) => this.describe(id));
      this.render();
    } catch (err) {
      this.showError(err, () => this.runPathQuery(from, to, options));
    }
  }

  /** Populate the detail panel for the current selection. */
  async inspect(selection: Selection | null): Promise<void> {
    this.state.select(selection);
    if (!selection) {
      this.ui.detail.textContent = '';
      return;
    }
    if (selection.kind === 'edge') {
      const edge = this.state.edge(selection.key);
      if (edge) {
        renderEdgeDetail(this.ui.detail, edge, (id) => this.describe(id), (report) =>
          this.loadReport(report),
        );
      }
      this.render();
      return;
    }
    const node = this.state.node(selection.id);
    if (!node) return;
    renderNodeDetail(this.ui.detail, node, null, (report) => this.loadReport(report));
    this.render();
    try {
      const detail = await this.api.entity(node.id);
      renderNodeDetail(this.ui.detail, node, detail, (report) => this.loadReport(report));
    } catch (err) {
      if (!(err instanceof ApiError && err.isNotFound)) {
        this.showError(err);
      }
    }
  }

  /** Merge a report's whole subgraph into the view. */
  async loadReport(reportId: string): Promise<void> {
    clearNotice(this.ui.notices);
    try {
      const doc = await this.api.reportSubgraph(reportId);
      if (doc.nodes.length === 0) {
        renderNotice(this.ui.notices, 'info', `report "${reportId}" has no triples`);
        return;
      }
      this.state.merge(doc);
      this.render();
    } catch (err) {
      this.showError(err, () => this.loadReport(reportId));
    }
  }

  clearView(): void {
    this.state.clear();
    this.layout.clear();
    this.highlights = NO_HIGHLIGHTS;
    this.ui.detail.textContent = '';
    this.ui.paths.textContent = '';
    clearNotice(this.ui.notices);
    this.render();
  }

  /** Re-run the most recent search; used by the stale-view notice. */
  async refresh(): Promise<void> {
    const last = [...this.state.history].reverse().find((q) => !q.includes('->'));
    if (last) {
      await this.searchAndFocus(last);
    } else {
      this.clearView();
    }
  }

  render(): void {
    this.layout.run(this.state.graph);
    renderGraph(this.ui.svg, this.state.visible(), this.layout.positions, {
      colors: this.colors,
      selection: this.state.selection,
      highlights: this.highlights,
      callbacks: {
        onSelectNode: (node) => void this.inspect({ kind: 'node', id: node.id }),
        onSelectEdge: (edge) => void this.inspect({ kind: 'edge', key: edgeKey(edge) }),
        onExpandNode: (node) => void this.expandNode(node.id),
      },
    });
    renderHistory(this.ui.history, this.state.history, (q) => {
      if (q.includes('->')) return;
      void this.searchAndFocus(q);
    });
    const shown = this.state.visible();
    this.ui.status.textContent = `${shown.nodes.length} nodes, ${shown.edges.length} edges`;
  }

  private describe(id: string): string {
    return this.state.node(id)?.label ?? id;
  }

  /**
   * Pull 1-hop neighborhoods for every node on a path so the highlighted
   * edges exist in the view. Requests run concurrently and merge in arrival
   * order; the union is order-independent.
   */
  private async fetchPathContext(paths: PathSequence[]): Promise<void> {
    const ids = new Set<string>();
    for (const path of paths) {
      for (let i = 0; i < path.length; i += 2) ids.add(path[i]);
    }
    await Promise.all(
      [...ids].map(async (id) => {
        try {
          const doc = await this.api.neighborhood(id, { hops: 1 });
          this.state.merge(doc);
        } catch {
          // a missing neighborhood only weakens the overlay; the path list
          // panel still shows the full hop sequence
        }
      }),
    );
  }

  private showError(err: unknown, retry?: () => void | Promise<void>): void {
    const message =
      err instanceof ApiError
        ? `service error (${err.code}): ${err.message}`
        : `unexpected error: ${err instanceof Error ? err.message : String(err)}`;
    renderNotice(this.ui.notices, 'error', message, retry ? () => void retry() : undefined);
  }

  private buildScaffold(): ExplorerController['ui'] {
    this.root.textContent = '';
    this.root.classList.add('explorer');

    const toolbar = document.createElement('div');
    toolbar.className = 'toolbar';

    const searchForm = document.createElement('form');
    searchForm.className = 'search-form';
    const searchInput = document.createElement('input');
    searchInput.type = 'search';
    searchInput.placeholder = 'search entities (name or alias)';
    searchInput.className = 'search-input';
    const searchButton = document.createElement('button');
    searchButton.type = 'submit';
    searchButton.textContent = 'search';
    const depth = document.createElement('input');
    depth.type = 'number';
    depth.min = '1';
    depth.max = '3';
    depth.value = '1';
    depth.title = 'expansion depth (hops)';
    depth.className = 'depth-input';
    searchForm.append(searchInput, depth, searchButton);
    searchForm.addEventListener('submit', (event) => {
      event.preventDefault();
      this.state.expansionDepth = Math.max(1, Math.min(3, Number(depth.value) || 1));
      void this.searchAndFocus(searchInput.value);
    });

    const pathForm = document.createElement('form');
    pathForm.className = 'path-form';
    const pathFrom = document.createElement('input');
    pathFrom.placeholder = 'path from';
    pathFrom.className = 'path-from';
    const pathTo = document.createElement('input');
    pathTo.placeholder = 'path to';
    pathTo.className = 'path-to';
    const pathMaxLen = document.createElement('input');
    pathMaxLen.type = 'number';
    pathMaxLen.min = '1';
    pathMaxLen.max = String(MAX_PATH_LEN);
    pathMaxLen.value = '6';
    pathMaxLen.className = 'path-max-len';
    pathMaxLen.title = 'max path length';
    const pathDirected = document.createElement('input');
    pathDirected.type = 'checkbox';
    pathDirected.className = 'path-directed';
    const directedLabel = document.createElement('label');
    directedLabel.append(pathDirected, document.createTextNode('directed'));
    const pathButton = document.createElement('button');
    pathButton.type = 'submit';
    pathButton.textContent = 'find paths';
    pathForm.append(pathFrom, pathTo, pathMaxLen, directedLabel, pathButton);
    pathForm.addEventListener('submit', (event) => {
      event.preventDefault();
      void this.runPathQuery(pathFrom.value, pathTo.value, {
        maxLen: Number(pathMaxLen.value),
        directed: pathDirected.checked,
      });
    });

    const clearButton = document.createElement('button');
    clearButton.type = 'button';
    clearButton.className = 'clear-view';
    clearButton.textContent = 'clear view';
    clearButton.addEventListener('click', () => this.clearView());

    toolbar.append(searchForm, pathForm, clearButton);

    const notices = document.createElement('div');
    notices.className = 'notices';

    const main = document.createElement('div');
    main.className = 'main';
    const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
    svg.setAttribute('class', 'graph');
    svg.setAttribute('viewBox', `0 0 ${this.layout.width} ${this.layout.height}`);
    svg.addEventListener('click', () => void this.inspect(null));

    const aside = document.createElement('aside');
    aside.className = 'sidebar';
    const legend = document.createElement('div');
    legend.className = 'legend';

    const filters = document.createElement('div');
    filters.className = 'filters';
    const filterInferred = document.createElement('input');
    filterInferred.type = 'checkbox';
    filterInferred.checked = true;
    filterInferred.className = 'filter-inferred';
    const inferredLabel = document.createElement('label');
    inferredLabel.append(filterInferred, document.createTextNode('show inferred'));
    const filterConfidence = document.createElement('input');
    filterConfidence.type = 'number';
    filterConfidence.min = '0';
    filterConfidence.max = '1';
    filterConfidence.step = '0.1';
    filterConfidence.value = '0';
    filterConfidence.className = 'filter-confidence';
    filterConfidence.title = 'minimum confidence';
    const filterRelations = document.createElement('select');
    filterRelations.multiple = true;
    filterRelations.className = 'filter-relations';
    filterRelations.title = 'relations (none selected shows all)';
    filters.append(inferredLabel, filterConfidence, filterRelations);

    const applyFilters = () => {
      const chosen = [...filterRelations.selectedOptions].map((o) => o.value);
      this.state.filters = {
        includeInferred: filterInferred.checked,
        minConfidence: Number(filterConfidence.value) || 0,
        relations: chosen.length > 0 ? new Set(chosen) : null,
      };
      this.render();
    };
    filterInferred.addEventListener('change', applyFilters);
    filterConfidence.addEventListener('change', applyFilters);
    filterRelations.addEventListener('change', applyFilters);

    const detail = document.createElement('div');
    detail.className = 'detail';
    const paths = document.createElement('div');
    paths.className = 'paths';
    const history = document.createElement('div');
    history.className = 'query-history';
    aside.append(legend, filters, detail, paths, history);
    main.append(svg, aside);

    const status = document.createElement('div');
    status.className = 'status';

    this.root.append(toolbar, notices, main, status);
    return {
      svg,
      notices,
      legend,
      detail,
      paths,
      history,
      status,
      searchInput,
      pathFrom,
      pathTo,
      pathMaxLen,
      pathDirected,
      filterInferred,
      filterConfidence,
      filterRelations,
      depth,
    };
  }
}

/** Highlight sets covering every hop of every minimal path, both edge orientations. */
export function highlightsFor(paths: PathSequence[]): Highlights {
  const nodes = new Set<string>();
  const edges = new Set<string>();
  for (const path of paths) {
    for (let i = 0; i < path.length; i += 2) nodes.add(path[i]);
    for (let i = 1; i + 1 < path.length; i += 2) {
      const [source, relation, target] = [path[i - 1], path[i], path[i + 1]];
      edges.add(edgeKey({ source, relation, target }));
      edges.add(edgeKey({ source: target, relation, target: source }));
    }
  }
  return { nodes, edges };
}
