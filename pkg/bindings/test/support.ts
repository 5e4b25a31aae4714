/** Shared test helpers: a seeded RNG, a mixed-grid generator, and a task pool. */

import { tokenGrid, type TokenGrid } from "../src/index.js";

/** Deterministic 32-bit RNG (sfc32) so every test run sees the same grids. */
export function sfc32(a: number, b: number, c: number, d: number): () => number {
  return () => {
    a >>>= 0;
    b >>>= 0;
    c >>>= 0;
    d >>>= 0;
    const t = (((a + b) | 0) + d) | 0;
    d = (d + 1) | 0;
    a = b ^ (b >>> 9);
    b = (c + (c << 3)) | 0;
    c = (c << 21) | (c >>> 11);
    c = (c + t) | 0;
    return (t >>> 0) / 4294967296;
  };
}

export function seededRng(seed: number): () => number {
  const rng = sfc32(0x9e3779b9 ^ seed, 0x243f6a88, 0xb7e15162, seed >>> 0);
  for (let i = 0; i < 12; i++) rng(); // scramble the seed words
  return rng;
}

/** Standard normal via Box-Muller. */
export function normal(rng: () => number): number {
  let u = 0;
  while (u === 0) u = rng();
  return Math.sqrt(-2.0 * Math.log(u)) * Math.cos(2.0 * Math.PI * rng());
}

function shuffled(n: number, rng: () => number): number[] {
  const order = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  return order;
}

/**
 * A random multi-tile grid: 1-3 sub-images of 2x2 .. 12x12 patches, sparse
 * occupancy, key_dim 1-16 with occasional all-zero key rows, and extended
 * score channels on every fourth draw.  Token order is shuffled across
 * sub-images.
 */
export function makeMixedGrid(rng: () => number, opts: { extended?: boolean } = {}): TokenGrid {
  const nSub = 1 + Math.floor(rng() * 3);
  const keyDim = 1 + Math.floor(rng() * 16);
  const gridDims: Array<[number, number]> = [];
  const scores: number[] = [];
  const positions: Array<[number, number]> = [];
  const subIds: number[] = [];
  for (let s = 0; s < nSub; s++) {
    const h = 2 + Math.floor(rng() * 11);
    const w = 2 + Math.floor(rng() * 11);
    gridDims.push([h, w]);
    const cells = shuffled(h * w, rng);
    const m = 1 + Math.floor(rng() * h * w);
    for (let t = 0; t < Math.min(m, h * w); t++) {
      positions.push([Math.floor(cells[t] / w), cells[t] % w]);
      scores.push(rng());
      subIds.push(s);
    }
  }
  const n = scores.length;
  const keys: number[][] = [];
  for (let i = 0; i < n; i++) {
    if (rng() < 0.02) {
      keys.push(new Array<number>(keyDim).fill(0));
    } else {
      keys.push(Array.from({ length: keyDim }, () => normal(rng)));
    }
  }
  const order = shuffled(n, rng);
  const extended = opts.extended ?? false;
  return tokenGrid({
    scores: order.map((i) => scores[i]),
    positions: order.map((i) => positions[i]),
    keys: order.map((i) => keys[i]),
    subimage_ids: order.map((i) => subIds[i]),
    grid_dims: gridDims,
    cross_attention: extended ? order.map(() => rng()) : null,
    self_attention: extended ? order.map(() => rng()) : null,
  });
}

/** Run `fn` over `items` with at most `limit` in flight. */
export async function mapLimit<T, R>(items: readonly T[], limit: number, fn: (item: T, index: number) => Promise<R>): Promise<R[]> {
  const results = new Array<R>(items.length);
  let next = 0;
  const worker = async (): Promise<void> => {
    for (;;) {
      const i = next++;
      if (i >= items.length) return;
      results[i] = await fn(items[i], i);
    }
  };
  await Promise.all(Array.from({ length: Math.min(limit, items.length) }, worker));
  return results;
}

/** Relative difference with the engine suite's convention for the denominator. */
export function relDiff(a: number, b: number): number {
  return Math.abs(a - b) / Math.max(Math.abs(a), Math.abs(b), 1e-300);
}

/** The two hand-checkable 1x3 grids used across the engine's own tests. */
export function handGridIdenticalKeys(): TokenGrid {
  return tokenGrid({
    scores: [1.0, 0.9, 0.8],
    positions: [
      [0, 0],
      [0, 1],
      [0, 2],
    ],
    keys: [[1.0], [1.0], [1.0]],
    subimage_ids: [0, 0, 0],
    grid_dims: [[1, 3]],
  });
}

export function handGridOrthogonalKeys(): TokenGrid {
  return tokenGrid({
    scores: [1.0, 0.9, 0.8],
    positions: [
      [0, 0],
      [0, 1],
      [0, 2],
    ],
    keys: [
      [1.0, 0.0],
      [0.0, 1.0],
      [1.0, 0.0],
    ],
    subimage_ids: [0, 0, 0],
    grid_dims: [[1, 3]],
  });
}
