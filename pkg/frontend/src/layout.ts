/**
 * Seeded force-directed layout.
 *
 * The seed derives from the subgraph identity (the root id, or the sorted
 * node ids when there is none), so the same subgraph always lays out the
 * same way and screenshots are comparable across runs. Incremental runs pin
 * nodes that already have positions: expansion adds new nodes around their
 * neighbors without disturbing the existing picture.
 */

import type { GraphDocument } from './types.js';

export interface Point {
  x: number;
  y: number;
}

/** Deterministic 32-bit PRNG; same seed, same sequence. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** FNV-1a hash of a string, for turning subgraph ids into seeds. */
export function seedFrom(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i += 1) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

export function subgraphSeedKey(doc: GraphDocument): string {
  if (doc.root) return doc.root;
  return doc.nodes
    .map((n) => n.id)
    .sort()
    .join(',');
}

export class ForceLayout {
  readonly positions = new Map<string, Point>();

  constructor(
    readonly width = 900,
    readonly height = 600,
  ) {}

  clear(): void {
    this.positions.clear();
  }

  /**
   * Lay out the document. Nodes already positioned are pinned; new nodes
   * start near a positioned neighbor (or a seeded spot) and relax.
   */
  run(doc: GraphDocument, iterations = 120): Map<string, Point> {
    const rand = mulberry32(seedFrom(subgraphSeedKey(doc)));
    const pinned = new Set<string>();
    for (const node of doc.nodes) {
      if (this.positions.has(node.id)) pinned.add(node.id);
    }

    const neighborOf = new Map<string, string[]>();
    const connect = (from: string, to: string) => {
      const list = neighborOf.get(from);
      if (list) list.push(to);
      else neighborOf.set(from, [to]);
    };
    for (const edge of doc.edges) {
      connect(edge.source, edge.target);
      connect(edge.target, edge.source);
    }

    for (const node of doc.nodes) {
      if (pinned.has(node.id)) continue;
      const anchor = (neighborOf.get(node.id) ?? []).find((id) => this.positions.has(id));
      if (anchor) {
        const at = this.positions.get(anchor)!;
        const angle = rand() * 2 * Math.PI;
        const radius = 60 + rand() * 40;
        this.positions.set(node.id, {
          x: at.x + Math.cos(angle) * radius,
          y: at.y + Math.sin(angle) * radius,
        });
      } else {
        this.positions.set(node.id, {
          x: this.width * (0.15 + 0.7 * rand()),
          y: this.height * (0.15 + 0.7 * rand()),
        });
      }
    }

    const ids = doc.nodes.map((n) => n.id);
    if (ids.length > 1) this.relax(ids, doc, pinned, iterations);
    this.clampAll(ids);
    return this.positions;
  }

  private relax(ids: string[], doc: GraphDocument, pinned: Set<string>, iterations: number): void {
    const area = this.width * this.height;
    const k = Math.sqrt(area / ids.length) * 0.7;
    for (let round = 0; round < iterations; round += 1) {
      const temperature = (this.width / 12) * (1 - round / iterations) + 1;
      const force = new Map<string, Point>(ids.map((id) => [id, { x: 0, y: 0 }]));

      for (let i = 0; i < ids.length; i += 1) {
        for (let j = i + 1; j < ids.length; j += 1) {
          const a = this.positions.get(ids[i])!;
          const b = this.positions.get(ids[j])!;
          let dx = a.x - b.x;
          let dy = a.y - b.y;
          let dist = Math.hypot(dx, dy);
          if (dist < 0.01) {
            dx = 0.01 * (i - j);
            dy = 0.01;
            dist = Math.hypot(dx, dy);
          }
          const repulse = (k * k) / dist;
          const fa = force.get(ids[i])!;
          const fb = force.get(ids[j])!;
          fa.x += (dx / dist) * repulse;
          fa.y += (dy / dist) * repulse;
          fb.x -= (dx / dist) * repulse;
          fb.y -= (dy / dist) * repulse;
        }
      }

      for (const edge of doc.edges) {
        const a = this.positions.get(edge.source);
        const b = this.positions.get(edge.target);
        if (!a || !b) continue;
        const dx = a.x - b.x;
        const dy = a.y - b.y;
        const dist = Math.max(Math.hypot(dx, dy), 0.01);
        const attract = (dist * dist) / k;
        const fa = force.get(edge.source);
        const fb = force.get(edge.target);
        if (fa) {
          fa.x -= (dx / dist) * attract;
          fa.y -= (dy / dist) * attract;
        }
        if (fb) {
          fb.x += (dx / dist) * attract;
          fb.y += (dy / dist) * attract;
        }
      }

      for (const id of ids) {
        if (pinned.has(id)) continue;
        const f = force.get(id)!;
        const magnitude = Math.max(Math.hypot(f.x, f.y), 0.01);
        const step = Math.min(magnitude, temperature);
        const at = this.positions.get(id)!;
        at.x += (f.x / magnitude) * step;
        at.y += (f.y / magnitude) * step;
      }
    }
  }

  private clampAll(ids: string[]): void {
    const margin = 24;
    for (const id of ids) {
      const at = this.positions.get(id)!;
      at.x = Math.min(Math.max(at.x, margin), this.width - margin);
      at.y = Math.min(Math.max(at.y, margin), this.height - margin);
    }
  }
}
