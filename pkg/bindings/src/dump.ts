/**
 * Token dump codecs: ATPK binary and its JSON mirror.
 *
 * ATPK is little-endian throughout.  Header: magic "ATPK", version u32 (= 1),
 * n_tokens u32, key_dim u32, n_subimages u32, then one (H u32, W u32) pair
 * per sub-image, then flags u32 (bit 0: extended score channels present).
 * Payload: scores f32[n], positions i32[2n] row/col interleaved,
 * subimage_ids i32[n], keys f32[n*key_dim], then cross_attention f32[n] and
 * self_attention f32[n] when the extended flag is set.  Declared lengths
 * must match the payload exactly; anything else is a format error.
 *
 * Scores and keys are stored as 32-bit floats, so binary round-trips are
 * bit-identical — including against dumps written by the engine itself.
 * JSON round-trips are value-exact (each float's shortest decimal form
 * recovers the same 32-bit value) but not guaranteed byte-identical across
 * languages, because number formatting conventions differ.
 */

import { DumpFormatError, ValidationError } from "./errors.js";
import { tokenGrid, type TokenGrid } from "./types.js";

export const MAGIC = Uint8Array.from([0x41, 0x54, 0x50, 0x4b]); // "ATPK"
export const VERSION = 1;
export const FLAG_EXTENDED = 1;

const FIXED_HEAD = 20; // magic + version + n_tokens + key_dim + n_subimages

export interface DumpHeader {
  version: number;
  n_tokens: number;
  key_dim: number;
  n_subimages: number;
  grid_dims: Array<readonly [number, number]>;
  flags: number;
}

export function headerSize(header: DumpHeader): number {
  return FIXED_HEAD + 8 * header.n_subimages + 4;
}

export function payloadSize(header: DumpHeader): number {
  const { n_tokens: n, key_dim: k } = header;
  const extended = (header.flags & FLAG_EXTENDED) !== 0;
  return 4 * n + 8 * n + 4 * n + 4 * n * k + (extended ? 8 * n : 0);
}

export function parseHeader(blob: Uint8Array): DumpHeader {
  if (blob.length < FIXED_HEAD) {
    throw new DumpFormatError("truncated header");
  }
  const view = new DataView(blob.buffer, blob.byteOffset, blob.byteLength);
  for (let i = 0; i < 4; i++) {
    if (blob[i] !== MAGIC[i]) {
      const got = Array.from(blob.subarray(0, 4), (b) => b.toString(16).padStart(2, "0")).join(" ");
      throw new DumpFormatError(`bad magic [${got}], expected "ATPK"`);
    }
  }
  const version = view.getUint32(4, true);
  if (version !== VERSION) {
    throw new DumpFormatError(`unsupported version ${version}, expected ${VERSION}`);
  }
  const n_tokens = view.getUint32(8, true);
  const key_dim = view.getUint32(12, true);
  const n_subimages = view.getUint32(16, true);
  const end = FIXED_HEAD + 8 * n_subimages + 4;
  if (blob.length < end) {
    throw new DumpFormatError("truncated header (sub-image dims)");
  }
  const grid_dims: Array<readonly [number, number]> = [];
  for (let s = 0; s < n_subimages; s++) {
    grid_dims.push([view.getUint32(FIXED_HEAD + 8 * s, true), view.getUint32(FIXED_HEAD + 8 * s + 4, true)]);
  }
  const flags = view.getUint32(end - 4, true);
  if ((flags & ~FLAG_EXTENDED) !== 0) {
    throw new DumpFormatError(`unknown flag bits 0x${flags.toString(16)}`);
  }
  return { version, n_tokens, key_dim, n_subimages, grid_dims, flags };
}

export function headerFor(grid: TokenGrid): DumpHeader {
  return {
    version: VERSION,
    n_tokens: grid.n_tokens,
    key_dim: grid.key_dim,
    n_subimages: grid.grid_dims.length,
    grid_dims: grid.grid_dims.map(([h, w]) => [h, w] as const),
    flags: grid.cross_attention !== null && grid.self_attention !== null ? FLAG_EXTENDED : 0,
  };
}

function packBinary(grid: TokenGrid): Uint8Array {
  const header = headerFor(grid);
  const total = headerSize(header) + payloadSize(header);
  const out = new Uint8Array(total);
  const view = new DataView(out.buffer);
  out.set(MAGIC, 0);
  view.setUint32(4, header.version, true);
  view.setUint32(8, header.n_tokens, true);
  view.setUint32(12, header.key_dim, true);
  view.setUint32(16, header.n_subimages, true);
  let off = FIXED_HEAD;
  for (const [h, w] of header.grid_dims) {
    view.setUint32(off, h, true);
    view.setUint32(off + 4, w, true);
    off += 8;
  }
  view.setUint32(off, header.flags, true);
  off += 4;
  for (let i = 0; i < grid.scores.length; i++, off += 4) view.setFloat32(off, grid.scores[i], true);
  for (let i = 0; i < grid.positions.length; i++, off += 4) view.setInt32(off, grid.positions[i], true);
  for (let i = 0; i < grid.subimage_ids.length; i++, off += 4) view.setInt32(off, grid.subimage_ids[i], true);
  for (let i = 0; i < grid.keys.length; i++, off += 4) view.setFloat32(off, grid.keys[i], true);
  if (grid.cross_attention !== null && grid.self_attention !== null) {
    for (let i = 0; i < grid.cross_attention.length; i++, off += 4) view.setFloat32(off, grid.cross_attention[i], true);
    for (let i = 0; i < grid.self_attention.length; i++, off += 4) view.setFloat32(off, grid.self_attention[i], true);
  }
  return out;
}

function packJson(grid: TokenGrid): Uint8Array {
  const keys: number[][] = [];
  for (let i = 0; i < grid.n_tokens; i++) {
    keys.push(Array.from(grid.keys.subarray(i * grid.key_dim, (i + 1) * grid.key_dim)));
  }
  const positions: number[][] = [];
  for (let i = 0; i < grid.n_tokens; i++) {
    positions.push([grid.positions[2 * i], grid.positions[2 * i + 1]]);
  }
  const doc: Record<string, unknown> = {
    format: "ATPK-JSON",
    version: VERSION,
    grid_dims: grid.grid_dims.map(([h, w]) => [h, w]),
    scores: Array.from(grid.scores),
    positions,
    subimage_ids: Array.from(grid.subimage_ids),
    keys,
  };
  if (grid.cross_attention !== null && grid.self_attention !== null) {
    doc["cross_attention"] = Array.from(grid.cross_attention);
    doc["self_attention"] = Array.from(grid.self_attention);
  }
  return new TextEncoder().encode(JSON.stringify(doc, null, 1) + "\n");
}

/** Serialize a grid to dump bytes ("binary" or "json"). */
export function writeDump(grid: TokenGrid, fmt: "binary" | "json" = "binary"): Uint8Array {
  if (fmt === "binary") return packBinary(grid);
  if (fmt === "json") return packJson(grid);
  throw new ValidationError(`format: unknown dump format '${fmt}'; valid: binary, json`);
}

function numberArray(doc: Record<string, unknown>, name: string, hint: string): number[] {
  if (!(name in doc)) {
    throw new DumpFormatError(`missing JSON field '${name}'`);
  }
  const raw = doc[name];
  if (!Array.isArray(raw) || raw.some((v) => typeof v !== "number")) {
    throw new DumpFormatError(`field '${name}' is not a well-formed ${hint} array`);
  }
  return raw as number[];
}

function pairArray(doc: Record<string, unknown>, name: string, hint: string): Array<[number, number]> {
  if (!(name in doc)) {
    throw new DumpFormatError(`missing JSON field '${name}'`);
  }
  const raw = doc[name];
  if (
    !Array.isArray(raw) ||
    raw.some((row) => !Array.isArray(row) || row.length !== 2 || row.some((v) => typeof v !== "number"))
  ) {
    throw new DumpFormatError(`field '${name}' is not a well-formed ${hint} array`);
  }
  return raw as Array<[number, number]>;
}

function readJson(blob: Uint8Array): TokenGrid {
  let doc: unknown;
  try {
    doc = JSON.parse(new TextDecoder("utf-8", { fatal: true }).decode(blob));
  } catch (exc) {
    throw new DumpFormatError(`malformed JSON dump: ${exc instanceof Error ? exc.message : String(exc)}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new DumpFormatError("JSON dump must be an object");
  }
  const record = doc as Record<string, unknown>;
  if (record["version"] !== VERSION) {
    throw new DumpFormatError(`unsupported version ${JSON.stringify(record["version"] ?? null)}, expected ${VERSION}`);
  }
  const extendedPresent = "cross_attention" in record || "self_attention" in record;
  const keysRaw = record["keys"];
  if (
    !Array.isArray(keysRaw) ||
    keysRaw.some((row) => !Array.isArray(row) || row.some((v) => typeof v !== "number"))
  ) {
    if (!("keys" in record)) throw new DumpFormatError("missing JSON field 'keys'");
    throw new DumpFormatError("field 'keys' is not a well-formed NxK numeric array");
  }
  return tokenGrid({
    scores: numberArray(record, "scores", "numeric"),
    positions: pairArray(record, "positions", "Nx2 integer"),
    keys: keysRaw as number[][],
    subimage_ids: numberArray(record, "subimage_ids", "integer"),
    grid_dims: pairArray(record, "grid_dims", "Sx2 integer"),
    cross_attention: extendedPresent ? numberArray(record, "cross_attention", "numeric") : null,
    self_attention: extendedPresent ? numberArray(record, "self_attention", "numeric") : null,
  });
}

function readBinary(blob: Uint8Array): TokenGrid {
  const header = parseHeader(blob);
  const bodyStart = headerSize(header);
  const bodyLen = blob.length - bodyStart;
  const expected = payloadSize(header);
  if (bodyLen !== expected) {
    throw new DumpFormatError(`payload length ${bodyLen} disagrees with header (expected ${expected})`);
  }
  const view = new DataView(blob.buffer, blob.byteOffset, blob.byteLength);
  let off = bodyStart;
  const takeF32 = (count: number): Float32Array => {
    const arr = new Float32Array(count);
    for (let i = 0; i < count; i++, off += 4) arr[i] = view.getFloat32(off, true);
    return arr;
  };
  const takeI32 = (count: number): Int32Array => {
    const arr = new Int32Array(count);
    for (let i = 0; i < count; i++, off += 4) arr[i] = view.getInt32(off, true);
    return arr;
  };
  const { n_tokens: n, key_dim: k } = header;
  const scores = takeF32(n);
  const positions = takeI32(2 * n);
  const subimage_ids = takeI32(n);
  const keys = takeF32(n * k);
  const extended = (header.flags & FLAG_EXTENDED) !== 0;
  const cross = extended ? takeF32(n) : null;
  const self_ = extended ? takeF32(n) : null;
  return tokenGrid({
    scores,
    positions,
    keys,
    key_dim: k,
    subimage_ids,
    grid_dims: header.grid_dims,
    cross_attention: cross,
    self_attention: self_,
  });
}

function looksBinary(blob: Uint8Array): boolean {
  return blob.length >= 4 && blob[0] === MAGIC[0] && blob[1] === MAGIC[1] && blob[2] === MAGIC[2] && blob[3] === MAGIC[3];
}

/**
 * Parse dump bytes back into a validated grid.
 *
 * `fmt` is "binary", "json", or "auto" (sniff the magic bytes).  Structural
 * problems throw {@link DumpFormatError}; a structurally sound dump whose
 * data breaks a grid invariant throws {@link ValidationError} naming the
 * field.
 */
export function readDump(blob: Uint8Array, fmt: "binary" | "json" | "auto" = "auto"): TokenGrid {
  let resolved: string = fmt;
  if (resolved === "auto") {
    resolved = looksBinary(blob) ? "binary" : "json";
  }
  if (resolved === "binary") return readBinary(blob);
  if (resolved === "json") return readJson(blob);
  throw new ValidationError(`format: unknown dump format '${fmt}'; valid: binary, json, auto`);
}
