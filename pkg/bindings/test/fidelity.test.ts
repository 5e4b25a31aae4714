/**
 * Fidelity gate: the in-process selection twin must reproduce the engine
 * CLI run-for-run.  Two hundred generated grids cross the process boundary
 * as binary dumps; for each one the engine's reported retained sequence
 * must match the twin's exactly (same indices, same order) and every final
 * score must agree to 1e-9 relative — the only tolerated daylight is
 * sub-ulp `exp` noise between the two runtimes.  The whole sweep must fit
 * in the one-minute budget.
 */

import { mkdtemp, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, expect, it } from "vitest";

import { cliPrune, prune, writeDumpFile, type PruneConfig } from "../src/index.js";
import { makeMixedGrid, mapLimit, relDiff, seededRng } from "./support.js";

const GRID_COUNT = 200;
const BUDGET_MS = 60_000;
const SUBPROCESS_POOL = 8;

const KEEPS = [0.05, 0.1, 0.25, 0.5] as const;

function configFor(index: number): PruneConfig {
  const config: PruneConfig = { keep_fraction: KEEPS[index % KEEPS.length] };
  if (index % 5 === 3) config.gaussian_enabled = false;
  if (index % 7 === 4) config.similarity_enabled = false;
  if (index % 11 === 6) config.gaussian_sigma = 4.0;
  return config;
}

let dir: string;

beforeAll(async () => {
  dir = await mkdtemp(join(tmpdir(), "atpk-fidelity-"));
});

afterAll(async () => {
  await rm(dir, { recursive: true, force: true });
});

it(`the twin matches ${GRID_COUNT} engine runs index-exactly within the time budget`, async () => {
  const started = Date.now();
  const rng = seededRng(20260816);
  const cases = Array.from({ length: GRID_COUNT }, (_, i) => ({
    grid: makeMixedGrid(rng, { extended: i % 4 === 0 }),
    config: configFor(i),
    index: i,
  }));

  let worstScoreDiff = 0;
  let comparedTokens = 0;
  await mapLimit(cases, SUBPROCESS_POOL, async ({ grid, config, index }) => {
    const path = join(dir, `grid_${String(index).padStart(3, "0")}.atpk`);
    await writeDumpFile(grid, path);
    const local = prune(grid, config);
    const report = await cliPrune(path, config);
    expect(report.n_tokens).toBe(grid.n_tokens);
    expect(report.retained).toEqual(local.retained);
    expect(report.final_scores).toHaveLength(grid.n_tokens);
    for (let t = 0; t < grid.n_tokens; t++) {
      const diff = relDiff(report.final_scores[t], local.final_scores[t]);
      if (diff > worstScoreDiff) worstScoreDiff = diff;
    }
    comparedTokens += grid.n_tokens;
  });

  expect(comparedTokens).toBeGreaterThan(GRID_COUNT); // every grid contributed
  expect(worstScoreDiff).toBeLessThan(1e-9);
  expect(Date.now() - started).toBeLessThan(BUDGET_MS);
  console.info(
    `fidelity: ${GRID_COUNT} runs, ${comparedTokens} scores compared, worst relative diff ${worstScoreDiff.toExponential(2)}`,
  );
}, BUDGET_MS + 30_000);
