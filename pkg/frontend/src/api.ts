/**
 * Thin fetch client for the documented malkg endpoints.
 *
 * Every server interaction in the explorer goes through this module, so the
 * "documented HTTP API only" rule is enforceable by inspection.
 */

import type {
  EntityDetail,
  GraphDocument,
  PathResult,
  SchemaDocument,
  SearchResult,
  StatsDocument,
} from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }

  get isNotFound(): boolean {
    return this.status === 404;
  }
}

export interface NeighborhoodOptions {
  hops?: number;
  inferred?: boolean;
  relations?: string[];
}

export interface PathOptions {
  maxLen?: number;
  directed?: boolean;
  inferred?: boolean;
}

type Query = Record<string, string | number | boolean | undefined>;

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string, query: Query = {}): string {
    const base = this.baseUrl.replace(/\/$/, '');
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(query)) {
      if (value !== undefined) params.set(key, String(value));
    }
    const suffix = params.toString();
    return suffix ? `${base}${path}?${suffix}` : `${base}${path}`;
  }

  private async request<T>(path: string, query: Query = {}, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.url(path, query), init);
    } catch (err) {
      throw new ApiError(0, 'network', err instanceof Error ? err.message : String(err));
    }
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // fall through; non-JSON bodies only matter for error reporting
    }
    if (!response.ok) {
      const overview = body as { code?: string; message?: string } | null;
      throw new ApiError(
        response.status,
        overview?.code ?? 'http-error',
        overview?.message ?? `HTTP ${response.status}`,
      );
    }
    return body as T;
  }

  search(q: string, className?: string, limit?: number): Promise<SearchResult> {
    return this.request('/entities', { q, class: className, limit });
  }

  entity(id: string): Promise<EntityDetail> {
    return this.request(`/entities/${encodeURIComponent(id)}`);
  }

  neighborhood(id: string, options: NeighborhoodOptions = {}): Promise<GraphDocument> {
    return this.request(`/entities/${encodeURIComponent(id)}/neighborhood`, {
      hops: options.hops,
      inferred: options.inferred,
      relations: options.relations?.join(','),
    });
  }

  paths(from: string, to: string, options: PathOptions = {}): Promise<PathResult> {
    return this.request('/paths', {
      from,
      to,
      max_len: options.maxLen,
      directed: options.directed,
      inferred: options.inferred,
    });
  }

  reportSubgraph(reportId: string): Promise<GraphDocument> {
    return this.request(`/reports/${encodeURIComponent(reportId)}/subgraph`);
  }

  schema(): Promise<SchemaDocument> {
    return this.request('/schema');
  }

  stats(): Promise<StatsDocument> {
    return this.request('/stats');
  }
}
