/**
 * Domain types mirrored from the engine's core module, which remains the
 * single source of truth for names, defaults, and validation rules.  Field
 * and option names are snake_case on purpose: a config object here must read
 * exactly like the engine's `PruneConfig` keyword arguments, and a grid's
 * fields match the dump payload sections one-to-one.
 *
 * Storage is 32-bit (scores and keys are `Float32Array`, matching the
 * on-disk format); all score arithmetic downstream runs in 64-bit.
 */

import { ValidationError } from "./errors.js";

export const AUTO = "auto";

export const STRATEGIES = [
  "adaptprune",
  "fastv_topk",
  "fitprune_single",
  "skip",
  "random",
  "random_3x3",
  "maxpool_3x3",
  "avgpool_3x3",
  "last_fraction",
] as const;

export type Strategy = (typeof STRATEGIES)[number];

export const RANDOMIZED_STRATEGIES: readonly Strategy[] = ["random", "random_3x3"];

/** One (H, W) patch-grid size per sub-image. */
export type GridDims = ReadonlyArray<readonly [number, number]>;

/**
 * Loose grid input: nested arrays the way call sites naturally hold them,
 * or pre-packed flat typed arrays (then `key_dim` is required for `keys`).
 */
export interface TokenGridInput {
  scores: ArrayLike<number>;
  /** (row, col) per token: nested pairs, or flat interleaved with length 2n. */
  positions: ReadonlyArray<ArrayLike<number>> | ArrayLike<number>;
  /** Key vectors: nested rows, or flat row-major (requires `key_dim`). */
  keys: ReadonlyArray<ArrayLike<number>> | ArrayLike<number>;
  subimage_ids: ArrayLike<number>;
  grid_dims: GridDims;
  key_dim?: number;
  cross_attention?: ArrayLike<number> | null;
  self_attention?: ArrayLike<number> | null;
}

/**
 * Canonical grid: validated, 32-bit, flat row-major storage.  `positions`
 * is interleaved (row0, col0, row1, col1, ...) and `keys` holds
 * `n_tokens * key_dim` entries.
 */
export interface TokenGrid {
  readonly n_tokens: number;
  readonly key_dim: number;
  readonly scores: Float32Array;
  readonly positions: Int32Array;
  readonly keys: Float32Array;
  readonly subimage_ids: Int32Array;
  readonly grid_dims: ReadonlyArray<readonly [number, number]>;
  readonly cross_attention: Float32Array | null;
  readonly self_attention: Float32Array | null;
}

function isNested(arr: ReadonlyArray<ArrayLike<number>> | ArrayLike<number>): arr is ReadonlyArray<ArrayLike<number>> {
  return Array.isArray(arr) && arr.length > 0 && typeof arr[0] === "object";
}

/** C-style int cast (truncate toward zero, wrap mod 2^32), as the engine stores positions. */
function toInt32(arr: ReadonlyArray<ArrayLike<number>> | ArrayLike<number>, width: number, field: string): Int32Array {
  if (isNested(arr)) {
    const out = new Int32Array(arr.length * width);
    for (let i = 0; i < arr.length; i++) {
      const row = arr[i];
      if (row.length !== width) {
        throw new ValidationError(`${field}: expected shape (${arr.length}, ${width}), got a row of length ${row.length}`);
      }
      for (let j = 0; j < width; j++) out[i * width + j] = row[j] | 0;
    }
    return out;
  }
  const flat = arr as ArrayLike<number>;
  const out = new Int32Array(flat.length);
  for (let i = 0; i < flat.length; i++) out[i] = flat[i] | 0;
  return out;
}

function toFloat32(arr: ReadonlyArray<ArrayLike<number>> | ArrayLike<number>): { data: Float32Array; rowLength: number | null } {
  if (isNested(arr)) {
    const width = arr[0].length;
    const out = new Float32Array(arr.length * width);
    for (let i = 0; i < arr.length; i++) {
      const row = arr[i];
      if (row.length !== width) {
        throw new ValidationError(`keys: expected shape (${arr.length}, key_dim), got a ragged row of length ${row.length}`);
      }
      for (let j = 0; j < width; j++) out[i * width + j] = row[j];
    }
    return { data: out, rowLength: width };
  }
  return { data: Float32Array.from(arr as ArrayLike<number>), rowLength: null };
}

function allFinite(arr: Float32Array): boolean {
  for (let i = 0; i < arr.length; i++) {
    if (!Number.isFinite(arr[i])) return false;
  }
  return true;
}

/**
 * Canonicalize and validate a grid.  Checks mirror the engine's, with the
 * same `field: problem` message shape, so a grid rejected here is rejected
 * there for the same stated reason.
 */
export function tokenGrid(input: TokenGridInput): TokenGrid {
  const scores = Float32Array.from(input.scores);
  const n = scores.length;
  if (n < 1) {
    throw new ValidationError("scores: grid must contain at least one token");
  }
  if (!allFinite(scores)) {
    throw new ValidationError("scores: non-finite value");
  }
  for (let i = 0; i < n; i++) {
    if (scores[i] < 0) throw new ValidationError("scores: negative value");
  }

  const positions = toInt32(input.positions, 2, "positions");
  if (positions.length !== 2 * n) {
    throw new ValidationError(`positions: expected shape (${n}, 2), got ${positions.length} entries`);
  }

  const { data: keys, rowLength } = toFloat32(input.keys);
  const keyDim = rowLength ?? input.key_dim ?? (keys.length % n === 0 ? keys.length / n : -1);
  if (keyDim < 1 || !Number.isInteger(keyDim)) {
    throw new ValidationError("keys: key_dim must be >= 1");
  }
  if (keys.length !== n * keyDim) {
    throw new ValidationError(`keys: expected shape (${n}, key_dim), got ${keys.length} entries for key_dim ${keyDim}`);
  }
  if (!allFinite(keys)) {
    throw new ValidationError("keys: non-finite value");
  }

  const subimageIds = toInt32(input.subimage_ids, 1, "subimage_ids");
  if (subimageIds.length !== n) {
    throw new ValidationError(`subimage_ids: expected shape (${n},), got (${subimageIds.length},)`);
  }

  const gridDims: Array<readonly [number, number]> = input.grid_dims.map(([h, w]) => [h | 0, w | 0]);
  if (gridDims.length === 0) {
    throw new ValidationError("grid_dims: at least one sub-image required");
  }
  for (let s = 0; s < gridDims.length; s++) {
    const [h, w] = gridDims[s];
    if (h < 1 || w < 1) {
      throw new ValidationError(`grid_dims: sub-image ${s} has non-positive dims (${h}, ${w})`);
    }
  }
  const nSub = gridDims.length;
  for (let i = 0; i < n; i++) {
    if (subimageIds[i] < 0 || subimageIds[i] >= nSub) {
      throw new ValidationError("subimage_ids: label outside [0, n_subimages)");
    }
  }
  // Per-sub-image: positions in bounds and unique.
  const seen = new Set<string>();
  for (let i = 0; i < n; i++) {
    const s = subimageIds[i];
    const [h, w] = gridDims[s];
    const r = positions[2 * i];
    const c = positions[2 * i + 1];
    if (r < 0 || r >= h || c < 0 || c >= w) {
      throw new ValidationError(`positions: token outside sub-image ${s} bounds (${h}, ${w})`);
    }
    const key = `${s}:${r}:${c}`;
    if (seen.has(key)) {
      throw new ValidationError(`positions: duplicate position within sub-image ${s}`);
    }
    seen.add(key);
  }

  const extend = (name: "cross_attention" | "self_attention"): Float32Array | null => {
    const raw = input[name];
    if (raw == null) return null;
    const arr = Float32Array.from(raw);
    if (arr.length !== n) {
      throw new ValidationError(`${name}: expected shape (${n},), got (${arr.length},)`);
    }
    if (!allFinite(arr)) {
      throw new ValidationError(`${name}: non-finite value`);
    }
    return arr;
  };
  const cross = extend("cross_attention");
  const self_ = extend("self_attention");
  if ((cross === null) !== (self_ === null)) {
    throw new ValidationError("cross_attention/self_attention: extended scores must come as a pair");
  }

  return {
    n_tokens: n,
    key_dim: keyDim,
    scores,
    positions,
    keys,
    subimage_ids: subimageIds,
    grid_dims: gridDims,
    cross_attention: cross,
    self_attention: self_,
  };
}

/** Number of tokens kept: half-up rounding of keep_fraction * n, floor 1. */
export function retainedCount(keepFraction: number, nTokens: number): number {
  return Math.max(1, Math.floor(keepFraction * nTokens + 0.5));
}

/**
 * All algorithm knobs; same names and defaults as the engine's `PruneConfig`.
 *
 * `gaussian_enabled` / `similarity_enabled` are tri-state: `null` resolves
 * to the strategy's own default (on for `adaptprune`, off for every
 * baseline).  `cutoff_multiplier` bounds the suppression neighborhood at
 * `cutoff_multiplier * sigma_d` patches; `Infinity` disables the bound.
 */
export interface PruneConfig {
  sigma_d?: number;
  sigma_s?: number;
  keep_fraction?: number;
  gaussian_sigma?: number | "auto";
  gaussian_enabled?: boolean | null;
  similarity_enabled?: boolean | null;
  cutoff_multiplier?: number;
  strategy?: Strategy;
  seed?: number | null;
}

/** A config with every field present and the tri-state toggles pinned. */
export interface ResolvedConfig {
  sigma_d: number;
  sigma_s: number;
  keep_fraction: number;
  gaussian_sigma: number | "auto";
  gaussian_enabled: boolean;
  similarity_enabled: boolean;
  cutoff_multiplier: number;
  strategy: Strategy;
  seed: number | null;
}

/** Fill defaults, validate every knob, and pin the tri-state toggles. */
export function resolveConfig(config: PruneConfig = {}): ResolvedConfig {
  const strategy = config.strategy ?? "adaptprune";
  if (!(STRATEGIES as readonly string[]).includes(strategy)) {
    throw new ValidationError(`strategy: unknown strategy '${strategy}'; valid: ${STRATEGIES.join(", ")}`);
  }
  const sigma_d = config.sigma_d ?? 2.0;
  const sigma_s = config.sigma_s ?? 0.5;
  for (const [name, v] of [["sigma_d", sigma_d], ["sigma_s", sigma_s]] as const) {
    if (typeof v !== "number" || !Number.isFinite(v) || v <= 0) {
      throw new ValidationError(`${name}: must be a positive finite real`);
    }
  }
  const gaussian_sigma = config.gaussian_sigma ?? AUTO;
  if (gaussian_sigma !== AUTO) {
    if (typeof gaussian_sigma !== "number" || !Number.isFinite(gaussian_sigma) || gaussian_sigma <= 0) {
      throw new ValidationError("gaussian_sigma: must be a positive finite real or 'auto'");
    }
  }
  const keep_fraction = config.keep_fraction ?? 0.1;
  if (!(keep_fraction > 0 && keep_fraction <= 1)) {
    throw new ValidationError("keep_fraction: must lie in (0, 1]");
  }
  const cutoff_multiplier = config.cutoff_multiplier ?? 3.0;
  if (Number.isNaN(cutoff_multiplier) || cutoff_multiplier <= 0) {
    throw new ValidationError("cutoff_multiplier: must be a positive real (math.inf disables the bound)");
  }
  const seed = config.seed ?? null;
  if (seed !== null && (!Number.isInteger(seed) || seed < 0)) {
    throw new ValidationError("seed: must be a nonnegative integer");
  }
  if (RANDOMIZED_STRATEGIES.includes(strategy as Strategy) && seed === null) {
    throw new ValidationError(`seed: strategy '${strategy}' requires an explicit seed`);
  }
  const own = strategy === "adaptprune";
  return {
    sigma_d,
    sigma_s,
    keep_fraction,
    gaussian_sigma,
    gaussian_enabled: config.gaussian_enabled ?? own,
    similarity_enabled: config.similarity_enabled ?? own,
    cutoff_multiplier,
    strategy: strategy as Strategy,
    seed,
  };
}

/**
 * Outcome of one selection run.  `retained` lists token indices in
 * selection order; `final_scores` holds every token's working score at
 * termination, with a selected token's entry frozen at its selection-time
 * value.  `trace` logs one `[iteration, selected_index, n_scores_changed]`
 * triple per loop iteration when requested.
 */
export interface PruneResult {
  retained: number[];
  final_scores: Float64Array;
  trace: Array<[number, number, number]> | null;
}
