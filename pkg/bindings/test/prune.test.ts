import { describe, expect, it } from "vitest";

import {
  AUTO,
  ValidationError,
  autoSigma,
  gaussianCorrection,
  prune,
  resolveConfig,
  retainedCount,
  similarityDecay,
  spatialDecay,
  tokenGrid,
} from "../src/index.js";
import { handGridIdenticalKeys, handGridOrthogonalKeys, makeMixedGrid, seededRng } from "./support.js";

const HAND_CONFIG = { sigma_d: 1.0, sigma_s: 0.5, keep_fraction: 0.667, gaussian_enabled: false } as const;
const E_HALF = Math.exp(-0.5); // spatial decay at distance 1 with sigma_d = 1
const E_TWO = Math.exp(-2.0); // spatial decay at distance 2; also similarity decay at cos 0 with sigma_s = 0.5

describe("decay kernels", () => {
  it("spatial decay matches the closed form", () => {
    expect(spatialDecay(1.0, 1.0)).toBe(E_HALF);
    expect(spatialDecay(2.0, 1.0)).toBe(E_TWO);
    expect(spatialDecay(0.0, 2.0)).toBe(1.0);
  });

  it("similarity decay is 1 at identical keys and exp(-2) at orthogonal ones", () => {
    expect(similarityDecay(1.0, 0.5)).toBe(1.0);
    expect(similarityDecay(0.0, 0.5)).toBe(E_TWO);
  });
});

describe("retained count", () => {
  it("rounds half up with a floor of one", () => {
    expect(retainedCount(0.1, 576)).toBe(58);
    expect(retainedCount(0.5, 5)).toBe(3);
    expect(retainedCount(0.0001, 3)).toBe(1);
    expect(retainedCount(1.0, 4)).toBe(4);
  });
});

describe("config resolution", () => {
  it("fills engine defaults and pins the tri-state toggles", () => {
    const cfg = resolveConfig({});
    expect(cfg).toEqual({
      sigma_d: 2.0,
      sigma_s: 0.5,
      keep_fraction: 0.1,
      gaussian_sigma: AUTO,
      gaussian_enabled: true,
      similarity_enabled: true,
      cutoff_multiplier: 3.0,
      strategy: "adaptprune",
      seed: null,
    });
  });

  it("toggles default off for baselines but stay overridable", () => {
    const base = resolveConfig({ strategy: "fastv_topk" });
    expect(base.gaussian_enabled).toBe(false);
    expect(base.similarity_enabled).toBe(false);
    const forced = resolveConfig({ strategy: "fastv_topk", gaussian_enabled: true });
    expect(forced.gaussian_enabled).toBe(true);
  });

  it.each([
    [{ keep_fraction: 0 }, /keep_fraction: must lie in \(0, 1]/],
    [{ keep_fraction: 1.5 }, /keep_fraction/],
    [{ sigma_d: -1 }, /sigma_d: must be a positive finite real/],
    [{ sigma_s: Number.NaN }, /sigma_s/],
    [{ gaussian_sigma: "wide" as never }, /gaussian_sigma: must be a positive finite real or 'auto'/],
    [{ cutoff_multiplier: Number.NaN }, /cutoff_multiplier/],
    [{ cutoff_multiplier: 0 }, /cutoff_multiplier/],
    [{ strategy: "topk" as never }, /strategy: unknown strategy 'topk'/],
    [{ strategy: "random" as const }, /seed: strategy 'random' requires an explicit seed/],
    [{ seed: -3 }, /seed: must be a nonnegative integer/],
    [{ seed: 1.5 }, /seed/],
  ])("rejects bad config %j", (config, message) => {
    expect(() => resolveConfig(config)).toThrowError(ValidationError);
    expect(() => resolveConfig(config)).toThrowError(message);
  });

  it("allows an infinite cutoff", () => {
    expect(resolveConfig({ cutoff_multiplier: Infinity }).cutoff_multiplier).toBe(Infinity);
  });
});

describe("grid validation", () => {
  const base = () => ({
    scores: [0.5, 0.25],
    positions: [
      [0, 0],
      [0, 1],
    ] as Array<[number, number]>,
    keys: [[1.0], [1.0]],
    subimage_ids: [0, 0],
    grid_dims: [[1, 2]] as Array<[number, number]>,
  });

  it("accepts a well-formed grid and quantizes to 32-bit storage", () => {
    const grid = tokenGrid({ ...base(), scores: [0.9, 0.25] });
    expect(grid.n_tokens).toBe(2);
    expect(grid.key_dim).toBe(1);
    expect(grid.scores[0]).toBe(Math.fround(0.9));
  });

  it.each([
    [{ scores: [] as number[] }, /scores: grid must contain at least one token/],
    [{ scores: [0.5, Number.NaN] }, /scores: non-finite value/],
    [{ scores: [0.5, -0.1] }, /scores: negative value/],
    [{ keys: [[Number.POSITIVE_INFINITY], [1.0]] }, /keys: non-finite value/],
    [{ subimage_ids: [0, 1] }, /subimage_ids: label outside \[0, n_subimages\)/],
    [{ grid_dims: [] as Array<[number, number]> }, /grid_dims: at least one sub-image required/],
    [{ grid_dims: [[0, 2]] as Array<[number, number]> }, /grid_dims: sub-image 0 has non-positive dims/],
    [
      {
        positions: [
          [0, 0],
          [0, 5],
        ] as Array<[number, number]>,
      },
      /positions: token outside sub-image 0 bounds/,
    ],
    [
      {
        positions: [
          [0, 1],
          [0, 1],
        ] as Array<[number, number]>,
      },
      /positions: duplicate position within sub-image 0/,
    ],
    [{ cross_attention: [0.1, 0.2] }, /extended scores must come as a pair/],
  ])("rejects %j", (patch, message) => {
    expect(() => tokenGrid({ ...base(), ...patch })).toThrowError(ValidationError);
    expect(() => tokenGrid({ ...base(), ...patch })).toThrowError(message);
  });
});

describe("gaussian correction", () => {
  it("uses max(H, W)/3 per tile in auto mode", () => {
    expect(autoSigma(1, 3)).toBe(1.0);
    expect(autoSigma(24, 24)).toBe(8.0);
  });

  it("multiplies by the exact per-position factors on a 1x3 tile", () => {
    const grid = handGridIdenticalKeys();
    const corrected = gaussianCorrection(grid); // auto sigma = 1, center (0, 1)
    expect(corrected[0]).toBe(1.0 * E_HALF);
    expect(corrected[1]).toBe(Math.fround(0.9) * 1.0);
    expect(corrected[2]).toBe(Math.fround(0.8) * E_HALF);
  });

  it("leaves the grid untouched and respects an explicit sigma", () => {
    const grid = handGridIdenticalKeys();
    const corrected = gaussianCorrection(grid, 2.0);
    expect(corrected[1]).toBe(Math.fround(0.9));
    expect(corrected[0]).toBe(1.0 * Math.exp(-1.0 / (2.0 * 2.0 * 2.0)));
    expect(grid.scores[0]).toBe(1.0);
  });
});

describe("adaptive NMS selection", () => {
  it("matches the hand computation with identical keys", () => {
    const result = prune(handGridIdenticalKeys(), HAND_CONFIG);
    expect(result.retained).toEqual([0, 2]);
    // Token 1 is suppressed by token 0 (distance 1) and token 2 (distance 1);
    // token 2 by token 0 only (distance 2).  Identical keys: similarity decay 1.
    let t1 = Math.fround(0.9);
    t1 = t1 * (1.0 - E_HALF);
    t1 = t1 * (1.0 - E_HALF);
    const t2 = Math.fround(0.8) * (1.0 - E_TWO);
    expect(Array.from(result.final_scores)).toEqual([1.0, t1, t2]);
  });

  it("matches the hand computation with orthogonal keys", () => {
    const result = prune(handGridOrthogonalKeys(), HAND_CONFIG);
    expect(result.retained).toEqual([0, 1]);
    // Token 1 is orthogonal to token 0: similarity decay exp(-2).  Token 2
    // shares token 0's key (decay 1) and is then suppressed again by token 1.
    const t1 = Math.fround(0.9) * (1.0 - E_HALF * E_TWO);
    let t2 = Math.fround(0.8);
    t2 = t2 * (1.0 - E_TWO);
    t2 = t2 * (1.0 - E_HALF * E_TWO);
    expect(Array.from(result.final_scores)).toEqual([1.0, t1, t2]);
  });

  it("keep 1.0 retains every token, highest first, all frozen", () => {
    const grid = handGridIdenticalKeys();
    const result = prune(grid, { ...HAND_CONFIG, keep_fraction: 1.0 });
    expect(result.retained).toEqual([0, 2, 1]);
    expect(result.final_scores[0]).toBe(1.0);
    expect(Math.min(...result.final_scores)).toBeGreaterThan(0);
  });

  it("breaks score ties toward the lowest index", () => {
    const grid = tokenGrid({
      scores: [0.5, 0.5, 0.5],
      positions: [
        [0, 0],
        [0, 1],
        [0, 2],
      ],
      keys: [[1.0], [1.0], [1.0]],
      subimage_ids: [0, 0, 0],
      grid_dims: [[1, 3]],
    });
    const result = prune(grid, HAND_CONFIG);
    expect(result.retained[0]).toBe(0);
    expect(result.retained).toEqual([0, 2]);
  });

  it("records one trace triple per iteration", () => {
    const result = prune(handGridIdenticalKeys(), HAND_CONFIG, true);
    expect(result.trace).toEqual([
      [0, 0, 2],
      [1, 2, 1],
    ]);
    expect(prune(handGridIdenticalKeys(), HAND_CONFIG).trace).toBeNull();
  });

  it("never suppresses across sub-image boundaries", () => {
    // Sub-image A holds all the attention mass; B's tokens are never picked
    // at this keep fraction, so their working scores must end exactly at
    // their corrected initial values.
    const rng = seededRng(41);
    const scoresA = Array.from({ length: 9 }, () => 0.5 + 0.5 * rng());
    const scoresB = Array.from({ length: 9 }, () => 1e-30 * rng());
    const positions: Array<[number, number]> = [];
    for (let r = 0; r < 3; r++) for (let c = 0; c < 3; c++) positions.push([r, c]);
    const grid = tokenGrid({
      scores: [...scoresA, ...scoresB],
      positions: [...positions, ...positions],
      keys: Array.from({ length: 18 }, () => [rng(), rng()]),
      subimage_ids: [...Array(9).fill(0), ...Array(9).fill(1)],
      grid_dims: [
        [3, 3],
        [3, 3],
      ],
    });
    const result = prune(grid, { keep_fraction: 0.25 });
    const initial = gaussianCorrection(grid);
    expect(result.retained.every((i) => i < 9)).toBe(true);
    for (let i = 9; i < 18; i++) {
      expect(result.final_scores[i]).toBe(initial[i]);
    }
  });

  it("is exactly invariant to power-of-two score scaling", () => {
    const rng = seededRng(42);
    const grid = makeMixedGrid(rng);
    const scaled = tokenGrid({
      scores: Array.from(grid.scores, (s) => 8.0 * s),
      positions: grid.positions,
      keys: grid.keys,
      key_dim: grid.key_dim,
      subimage_ids: grid.subimage_ids,
      grid_dims: grid.grid_dims,
    });
    const base = prune(grid, { keep_fraction: 0.3 });
    const big = prune(scaled, { keep_fraction: 0.3 });
    expect(big.retained).toEqual(base.retained);
    for (let i = 0; i < grid.n_tokens; i++) {
      expect(big.final_scores[i]).toBe(8.0 * base.final_scores[i]);
    }
  });

  it("only the adaptprune strategy runs in-process", () => {
    expect(() => prune(handGridIdenticalKeys(), { strategy: "fastv_topk" })).toThrowError(
      /strategy: only 'adaptprune' runs in-process/,
    );
  });

  it("an infinite cutoff suppresses the whole tile", () => {
    // Distance 7 sits beyond the default bound (3 * sigma_d = 6) but well
    // inside float resolution, so the two cutoffs give different scores.
    const grid = tokenGrid({
      scores: [1.0, 0.5],
      positions: [
        [0, 0],
        [0, 7],
      ],
      keys: [[1.0], [1.0]],
      subimage_ids: [0, 0],
      grid_dims: [[1, 8]],
    });
    const config = { sigma_d: 2.0, keep_fraction: 0.5, gaussian_enabled: false } as const;
    const bounded = prune(grid, config);
    expect(bounded.final_scores[1]).toBe(0.5);
    const unbounded = prune(grid, { ...config, cutoff_multiplier: Infinity });
    expect(unbounded.final_scores[1]).toBeLessThan(0.5);
    expect(unbounded.final_scores[1]).toBe(0.5 * (1.0 - spatialDecay(7.0, 2.0)));
  });
});
