/**
 * Error taxonomy, mirrored from the engine so callers can branch on the same
 * three categories on either side of the process boundary:
 *
 * - {@link ValidationError} — the caller handed us something semantically
 *   wrong (bad config value, inconsistent grid, unusable CLI arguments).
 * - {@link DumpFormatError} — bytes that claim to be a dump but are not
 *   (bad magic, truncation, payload/header disagreement, malformed JSON).
 * - {@link EngineError} — the engine process itself failed (non-zero exit
 *   that is not a usage error, unparsable report, missing interpreter).
 */

export class ValidationError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ValidationError";
  }
}

export class DumpFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DumpFormatError";
  }
}

export class EngineError extends Error {
  /** Exit code of the engine process, when one was observed. */
  readonly exitCode: number | null;

  constructor(message: string, exitCode: number | null = null) {
    super(message);
    this.name = "EngineError";
    this.exitCode = exitCode;
  }
}
