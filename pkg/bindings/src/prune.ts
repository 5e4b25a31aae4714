/**
 * In-process twin of the engine's adaptive-NMS selection loop.
 *
 * Each round picks the highest-scoring unselected token (global argmax,
 * ties to the lowest index), then discounts every unselected token of the
 * same sub-image within `cutoff_multiplier * sigma_d` patches by
 * `1 - D_spatial * D_similarity`.  Selected tokens' scores are frozen at
 * their selection-time value and never suppressed afterwards.
 *
 * Numerics mirror the engine operation-for-operation: scores and keys are
 * quantized to 32-bit on input (the storage dtype), every intermediate is
 * IEEE float64, spatial decay squares the square root of the squared
 * distance (not the squared distance directly), and suppressed tokens are
 * marked with -Infinity while live.  The only tolerated divergence is
 * sub-ulp noise from the two runtimes' `exp` implementations, which the
 * fidelity suite bounds against the engine CLI on frozen seeds.
 *
 * Only the `adaptprune` strategy (including its toggle ablations) runs
 * in-process; baseline strategies live behind the engine CLI — see
 * `cliPrune`.
 */

import { ValidationError } from "./errors.js";
import {
  AUTO,
  resolveConfig,
  retainedCount,
  tokenGrid,
  type PruneConfig,
  type PruneResult,
  type TokenGrid,
  type TokenGridInput,
} from "./types.js";

/** Default Gaussian width for an H x W tile: max(H, W) / 3. */
export function autoSigma(height: number, width: number): number {
  return Math.max(height, width) / 3.0;
}

/** exp(-d^2 / (2 sigma_d^2)) for Euclidean patch distance d. */
export function spatialDecay(distance: number, sigmaD: number): number {
  return Math.exp(-(distance * distance) / (2.0 * sigmaD * sigmaD));
}

/** exp(-(1 - cos)^2 / (2 sigma_s^2)) for cosine similarity cos. */
export function similarityDecay(cosSim: number, sigmaS: number): number {
  const gap = 1.0 - cosSim;
  return Math.exp(-(gap * gap) / (2.0 * sigmaS * sigmaS));
}

/**
 * Multiply each token's score by a Gaussian of its distance to the tile
 * center ((H-1)/2, (W-1)/2).  With `sigma = "auto"` each sub-image gets its
 * own width max(H, W) / 3; a numeric sigma applies to all sub-images.
 * Returns float64 scores; the grid is untouched.
 */
export function gaussianCorrection(grid: TokenGrid, sigma: number | "auto" = AUTO): Float64Array {
  const out = Float64Array.from(grid.scores);
  for (let s = 0; s < grid.grid_dims.length; s++) {
    const [h, w] = grid.grid_dims[s];
    const sig = sigma === AUTO ? autoSigma(h, w) : sigma;
    const cr = (h - 1) / 2.0;
    const cc = (w - 1) / 2.0;
    for (let i = 0; i < grid.n_tokens; i++) {
      if (grid.subimage_ids[i] !== s) continue;
      const dr = grid.positions[2 * i] - cr;
      const dc = grid.positions[2 * i + 1] - cc;
      const sq = dr * dr + dc * dc;
      out[i] *= Math.exp(-sq / (2.0 * sig * sig));
    }
  }
  return out;
}

/** Unit-normalize key rows in float64; zero-norm rows become zero rows. */
function unitKeys(grid: TokenGrid): Float64Array {
  const { n_tokens: n, key_dim: k } = grid;
  const unit = new Float64Array(n * k);
  for (let i = 0; i < n; i++) {
    let sumsq = 0.0;
    for (let j = 0; j < k; j++) {
      const v = grid.keys[i * k + j];
      sumsq += v * v;
    }
    const norm = Math.sqrt(sumsq);
    if (norm !== 0) {
      for (let j = 0; j < k; j++) unit[i * k + j] = grid.keys[i * k + j] / norm;
    }
  }
  return unit;
}

/**
 * Run the adaptive NMS loop and return the retained token set.
 *
 * `retained` lists indices in selection order; `final_scores` holds every
 * token's working score at termination with selected entries frozen at
 * their selection-time value; `trace`, when requested, logs one
 * `[iteration, selected_index, n_scores_changed]` triple per round.
 */
export function prune(input: TokenGrid | TokenGridInput, config: PruneConfig = {}, trace = false): PruneResult {
  const cfg = resolveConfig(config);
  if (cfg.strategy !== "adaptprune") {
    throw new ValidationError(
      `strategy: only 'adaptprune' runs in-process; run '${cfg.strategy}' through the engine CLI (cliPrune)`,
    );
  }
  const grid = tokenGrid(input);
  const n = grid.n_tokens;
  const k = grid.key_dim;
  const nKeep = retainedCount(cfg.keep_fraction, n);

  const live = cfg.gaussian_enabled ? gaussianCorrection(grid, cfg.gaussian_sigma) : Float64Array.from(grid.scores);

  const unit = unitKeys(grid);
  // Plain multiply, not `**`: exponentiation is not guaranteed correctly
  // rounded on every JS engine, and this square must match the engine's bit
  // for bit.
  const cutoffRadius = cfg.cutoff_multiplier * cfg.sigma_d;
  const cutoffSq = cutoffRadius * cutoffRadius;

  const open = new Uint8Array(n).fill(1);
  const retained: number[] = [];
  const frozen = new Float64Array(nKeep);
  const traceLog: Array<[number, number, number]> | null = trace ? [] : null;

  for (let it = 0; it < nKeep; it++) {
    // Global argmax; strict comparison keeps the lowest index on ties.
    let i = 0;
    let best = live[0];
    for (let j = 1; j < n; j++) {
      if (live[j] > best) {
        best = live[j];
        i = j;
      }
    }
    retained.push(i);
    frozen[it] = live[i];
    live[i] = -Infinity;
    open[i] = 0;

    let changed = 0;
    const ri = grid.positions[2 * i];
    const ci = grid.positions[2 * i + 1];
    const si = grid.subimage_ids[i];
    for (let j = 0; j < n; j++) {
      if (!open[j] || grid.subimage_ids[j] !== si) continue;
      const dr = grid.positions[2 * j] - ri;
      const dc = grid.positions[2 * j + 1] - ci;
      const dsq = dr * dr + dc * dc;
      if (!(dsq <= cutoffSq)) continue;
      const dSpatial = spatialDecay(Math.sqrt(dsq), cfg.sigma_d);
      let dSim = 1.0;
      if (cfg.similarity_enabled) {
        let cos = 0.0;
        for (let m = 0; m < k; m++) cos += unit[j * k + m] * unit[i * k + m];
        dSim = similarityDecay(cos, cfg.sigma_s);
      }
      const before = live[j];
      const after = before * (1.0 - dSpatial * dSim);
      if (traceLog !== null && after !== before) changed += 1;
      live[j] = after;
    }
    if (traceLog !== null) traceLog.push([it, i, changed]);
  }

  const final = live;
  for (let t = 0; t < retained.length; t++) {
    final[retained[t]] = frozen[t];
  }
  return { retained, final_scores: final, trace: traceLog };
}
