/**
 * TypeScript client for the adaptprune token-pruning engine.
 *
 * Three layers, importable à la carte:
 *
 * - `types` / `dump`: the ATPK dump formats (binary and JSON) with the same
 *   validation rules as the engine — pure codecs, no I/O.
 * - `prune`: an in-process twin of the adaptive-NMS selection loop for the
 *   `adaptprune` strategy, numerically faithful to the engine.
 * - `cli`: subprocess helpers that drive the engine CLI itself (all
 *   strategies, run reports), with engine diagnostics rethrown as typed
 *   exceptions.
 */

export { DumpFormatError, EngineError, ValidationError } from "./errors.js";
export {
  AUTO,
  RANDOMIZED_STRATEGIES,
  STRATEGIES,
  resolveConfig,
  retainedCount,
  tokenGrid,
  type GridDims,
  type PruneConfig,
  type PruneResult,
  type ResolvedConfig,
  type Strategy,
  type TokenGrid,
  type TokenGridInput,
} from "./types.js";
export {
  FLAG_EXTENDED,
  MAGIC,
  VERSION,
  headerFor,
  headerSize,
  parseHeader,
  payloadSize,
  readDump,
  writeDump,
  type DumpHeader,
} from "./dump.js";
export { autoSigma, gaussianCorrection, prune, similarityDecay, spatialDecay } from "./prune.js";
export {
  cliPrune,
  raiseForExit,
  readDumpFile,
  runEngine,
  writeDumpFile,
  type EngineOptions,
  type EngineRun,
  type RunReport,
} from "./cli.js";
