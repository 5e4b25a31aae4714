/**
 * Subprocess bridge to the engine CLI.
 *
 * Everything here crosses the process boundary through the engine's two
 * public surfaces only: dump files on disk and the CLI's JSON reports.
 * Engine failures come back as typed exceptions carrying the engine's own
 * diagnostic verbatim (the `error: ` prefix stripped): usage and data
 * problems (exit 2) map to {@link ValidationError} or
 * {@link DumpFormatError} depending on the message, anything else to
 * {@link EngineError}.
 *
 * The interpreter is `python3` by default; override with the
 * `ADAPTPRUNE_PYTHON` environment variable or the `python` option.
 */

import { execFile } from "node:child_process";
import { readFile, writeFile } from "node:fs/promises";

import { readDump, writeDump } from "./dump.js";
import { DumpFormatError, EngineError, ValidationError } from "./errors.js";
import type { PruneConfig, TokenGrid } from "./types.js";

export interface EngineOptions {
  /** Interpreter to launch (default: $ADAPTPRUNE_PYTHON, then "python3"). */
  python?: string;
  /** Kill the engine process after this many milliseconds (default 120s). */
  timeoutMs?: number;
}

export interface EngineRun {
  code: number;
  stdout: string;
  stderr: string;
}

/** Report emitted by the engine's `prune` command. */
export interface RunReport {
  strategy: string;
  config: {
    keep_fraction: number;
    sigma_d: number;
    sigma_s: number;
    gaussian_sigma: number | "auto";
    gaussian_enabled: boolean;
    similarity_enabled: boolean;
    cutoff_multiplier: number;
    strategy: string;
    seed: number | null;
  };
  n_tokens: number;
  retained: number[];
  final_scores: number[];
  metrics: {
    dispersion: number;
    redundancy: number;
    score_mass: number;
    position_centroid: [number, number];
  };
  wall_time_s: number;
  trace?: Array<[number, number, number]>;
}

/** Message heads the engine's dump readers use; everything else on exit 2 is a data/usage problem. */
const FORMAT_MESSAGE_HEADS = [
  "truncated header",
  "bad magic",
  "unsupported version",
  "unknown flag bits",
  "payload length",
  "malformed JSON dump",
  "JSON dump must be an object",
  "missing JSON field",
  "field '",
];

function classifyUsageError(message: string): ValidationError | DumpFormatError {
  if (FORMAT_MESSAGE_HEADS.some((head) => message.startsWith(head))) {
    return new DumpFormatError(message);
  }
  return new ValidationError(message);
}

function diagnosticFrom(stderr: string): string | null {
  for (const line of stderr.split("\n")) {
    if (line.startsWith("error: ")) return line.slice("error: ".length);
    if (line.startsWith("internal error: ")) return line.slice("internal error: ".length);
  }
  return null;
}

/**
 * Run `python3 -m adaptprune <args>` and return its exit code and streams.
 * Only spawn-level failures throw; callers interpret nonzero exits.
 */
export function runEngine(args: string[], options: EngineOptions = {}): Promise<EngineRun> {
  const python = options.python ?? process.env["ADAPTPRUNE_PYTHON"] ?? "python3";
  const timeoutMs = options.timeoutMs ?? 120_000;
  return new Promise((resolve, reject) => {
    execFile(
      python,
      ["-m", "adaptprune", ...args],
      { timeout: timeoutMs, maxBuffer: 1 << 26, encoding: "utf8" },
      (err, stdout, stderr) => {
        if (err !== null) {
          const anyErr = err as NodeJS.ErrnoException & { killed?: boolean; code?: number | string };
          if (anyErr.killed) {
            reject(new EngineError(`engine timed out after ${timeoutMs} ms`));
            return;
          }
          if (typeof anyErr.code === "number") {
            resolve({ code: anyErr.code, stdout, stderr });
            return;
          }
          reject(new EngineError(`failed to launch '${python}': ${anyErr.message}`));
          return;
        }
        resolve({ code: 0, stdout, stderr });
      },
    );
  });
}

/** Turn a nonzero engine exit into the matching typed exception. */
export function raiseForExit(run: EngineRun): void {
  if (run.code === 0) return;
  const message = diagnosticFrom(run.stderr);
  if (run.code === 2 && message !== null) {
    throw classifyUsageError(message);
  }
  throw new EngineError(message ?? `engine exited with code ${run.code}`, run.code);
}

function pushNumber(args: string[], flag: string, value: number): void {
  args.push(flag, String(value));
}

/**
 * Prune a dump file through the engine CLI and parse the run report.
 *
 * The `prune` command exposes every config knob except the suppression
 * cutoff (pinned at its default) and cannot force-enable corrections for
 * baseline strategies; configs asking for either are rejected here rather
 * than silently altered.
 */
export async function cliPrune(
  dumpPath: string,
  config: PruneConfig = {},
  options: EngineOptions & { trace?: boolean } = {},
): Promise<RunReport> {
  const strategy = config.strategy ?? "adaptprune";
  if (config.cutoff_multiplier !== undefined && config.cutoff_multiplier !== 3.0) {
    throw new ValidationError("cutoff_multiplier: the engine CLI pins the suppression cutoff at its default (3.0)");
  }
  if (strategy !== "adaptprune") {
    for (const toggle of ["gaussian_enabled", "similarity_enabled"] as const) {
      if (config[toggle] === true) {
        throw new ValidationError(`${toggle}: the engine CLI cannot force-enable corrections for baseline strategies`);
      }
    }
  }
  const args: string[] = ["prune", "--input", dumpPath];
  if (config.keep_fraction !== undefined) pushNumber(args, "--keep", config.keep_fraction);
  if (config.sigma_d !== undefined) pushNumber(args, "--sigma-d", config.sigma_d);
  if (config.sigma_s !== undefined) pushNumber(args, "--sigma-s", config.sigma_s);
  if (config.gaussian_sigma !== undefined) args.push("--gaussian-sigma", String(config.gaussian_sigma));
  if (config.gaussian_enabled === false) args.push("--no-gaussian");
  if (config.similarity_enabled === false) args.push("--no-similarity");
  if (config.seed !== undefined && config.seed !== null) pushNumber(args, "--seed", config.seed);
  if (config.strategy !== undefined) args.push("--strategy", config.strategy);
  if (options.trace) args.push("--trace");

  const run = await runEngine(args, options);
  raiseForExit(run);
  try {
    return JSON.parse(run.stdout) as RunReport;
  } catch {
    throw new EngineError(`engine produced an unparsable report: ${run.stdout.slice(0, 200)}`);
  }
}

/** Read a dump file from disk (binary, JSON, or sniffed). */
export async function readDumpFile(path: string, fmt: "binary" | "json" | "auto" = "auto"): Promise<TokenGrid> {
  return readDump(new Uint8Array(await readFile(path)), fmt);
}

/** Serialize a grid to a dump file; returns the byte count written. */
export async function writeDumpFile(grid: TokenGrid, path: string, fmt: "binary" | "json" = "binary"): Promise<number> {
  const blob = writeDump(grid, fmt);
  await writeFile(path, blob);
  return blob.length;
}
