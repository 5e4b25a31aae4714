"""Token dump formats: ATPK binary and its JSON mirror.

ATPK is little-endian throughout.  Header: magic "ATPK", version u32 (= 1),
n_tokens u32, key_dim u32, n_subimages u32, then one (H u32, W u32) pair per
sub-image, then flags u32 (bit 0: extended score channels present).  Payload:
scores f32[n], positions i32[2n] row/col interleaved, subimage_ids i32[n],
keys f32[n*key_dim], then cross_attention f32[n] and self_attention f32[n]
when the extended flag is set.  Declared lengths must match the payload
exactly; anything else is a format error.  Scores and keys are stored as
32-bit floats, so round-trips are bit-identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .core.types import TokenGrid
from .errors import DumpFormatError, ValidationError

MAGIC = b"ATPK"
VERSION = 1
FLAG_EXTENDED = 1

_HEAD = struct.Struct("<4sIIII")  # magic, version, n_tokens, key_dim, n_subimages


@dataclass(frozen=True)
class DumpHeader:
    """Parsed ATPK header."""

    version: int
    n_tokens: int
    key_dim: int
    n_subimages: int
    grid_dims: tuple[tuple[int, int], ...]
    flags: int

    @property
    def extended(self) -> bool:
        return bool(self.flags & FLAG_EXTENDED)

    @property
    def header_size(self) -> int:
        return _HEAD.size + 8 * self.n_subimages + 4

    @property
    def payload_size(self) -> int:
        n, k = self.n_tokens, self.key_dim
        return 4 * n + 8 * n + 4 * n + 4 * n * k + (8 * n if self.extended else 0)

    def pack(self) -> bytes:
        out = bytearray(_HEAD.pack(MAGIC, self.version, self.n_tokens, self.key_dim, self.n_subimages))
        for h, w in self.grid_dims:
            out.extend(struct.pack("<II", h, w))
        out.extend(struct.pack("<I", self.flags))
        return bytes(out)

    @classmethod
    def unpack(cls, data: bytes) -> "DumpHeader":
        if len(data) < _HEAD.size:
            raise DumpFormatError("truncated header")
        magic, version, n_tokens, key_dim, n_sub = _HEAD.unpack_from(data)
        if magic != MAGIC:
            raise DumpFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise DumpFormatError(f"unsupported version {version}, expected {VERSION}")
        end = _HEAD.size + 8 * n_sub + 4
        if len(data) < end:
            raise DumpFormatError("truncated header (sub-image dims)")
        dims = tuple(
            struct.unpack_from("<II", data, _HEAD.size + 8 * i) for i in range(n_sub)
        )
        (flags,) = struct.unpack_from("<I", data, end - 4)
        if flags & ~FLAG_EXTENDED:
            raise DumpFormatError(f"unknown flag bits 0x{flags:x}")
        return cls(version, n_tokens, key_dim, n_sub, dims, flags)


def header_for(grid: TokenGrid) -> DumpHeader:
    return DumpHeader(
        version=VERSION,
        n_tokens=grid.n_tokens,
        key_dim=grid.key_dim,
        n_subimages=grid.n_subimages,
        grid_dims=grid.grid_dims,
        flags=FLAG_EXTENDED if grid.has_extended_scores else 0,
    )


def _pack_binary(grid: TokenGrid) -> bytes:
    out = bytearray(header_for(grid).pack())
    out.extend(grid.scores.astype("<f4").tobytes())
    out.extend(grid.positions.astype("<i4").tobytes())
    out.extend(grid.subimage_ids.astype("<i4").tobytes())
    out.extend(grid.keys.astype("<f4").tobytes())
    if grid.has_extended_scores:
        out.extend(grid.cross_attention.astype("<f4").tobytes())
        out.extend(grid.self_attention.astype("<f4").tobytes())
    return bytes(out)


def _pack_json(grid: TokenGrid) -> bytes:
    doc = {
        "format": "ATPK-JSON",
        "version": VERSION,
        "grid_dims": [[h, w] for h, w in grid.grid_dims],
        "scores": [float(x) for x in grid.scores],
        "positions": [[int(r), int(c)] for r, c in grid.positions],
        "subimage_ids": [int(s) for s in grid.subimage_ids],
        "keys": [[float(v) for v in row] for row in grid.keys],
    }
    if grid.has_extended_scores:
        doc["cross_attention"] = [float(x) for x in grid.cross_attention]
        doc["self_attention"] = [float(x) for x in grid.self_attention]
    return (json.dumps(doc, indent=1) + "\n").encode("ascii")


def write_dump(grid: TokenGrid, fmt: str = "binary", destination: str | Path | BinaryIO = None) -> int:
    """Serialize a grid; returns the byte count written.

    ``destination`` may be a path or a binary file object.
    """
    if fmt == "binary":
        blob = _pack_binary(grid)
    elif fmt == "json":
        blob = _pack_json(grid)
    else:
        raise ValidationError(f"format: unknown dump format {fmt!r}; valid: binary, json")
    if destination is None:
        raise ValidationError("destination: required")
    if hasattr(destination, "write"):
        destination.write(blob)
    else:
        Path(destination).write_bytes(blob)
    return len(blob)


def _array_field(doc: dict, name: str, dtype, shape_hint: str) -> np.ndarray:
    if name not in doc:
        raise DumpFormatError(f"missing JSON field {name!r}")
    try:
        return np.asarray(doc[name], dtype=dtype)
    except (TypeError, ValueError):
        raise DumpFormatError(f"field {name!r} is not a well-formed {shape_hint} array") from None


def _read_json(blob: bytes) -> TokenGrid:
    try:
        doc = json.loads(blob)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DumpFormatError(f"malformed JSON dump: {exc}") from None
    if not isinstance(doc, dict):
        raise DumpFormatError("JSON dump must be an object")
    if doc.get("version") != VERSION:
        raise DumpFormatError(f"unsupported version {doc.get('version')!r}, expected {VERSION}")
    kwargs = {}
    if "cross_attention" in doc or "self_attention" in doc:
        kwargs["cross_attention"] = _array_field(doc, "cross_attention", np.float32, "numeric")
        kwargs["self_attention"] = _array_field(doc, "self_attention", np.float32, "numeric")
    dims = _array_field(doc, "grid_dims", np.int64, "Sx2 integer")
    if dims.ndim != 2 or dims.shape[1] != 2:
        raise DumpFormatError("field 'grid_dims' is not a well-formed Sx2 integer array")
    return TokenGrid(
        scores=_array_field(doc, "scores", np.float32, "numeric"),
        positions=_array_field(doc, "positions", np.int32, "Nx2 integer"),
        keys=_array_field(doc, "keys", np.float32, "NxK numeric"),
        subimage_ids=_array_field(doc, "subimage_ids", np.int32, "integer"),
        grid_dims=tuple((int(h), int(w)) for h, w in dims),
        **kwargs,
    )


def _read_binary(blob: bytes) -> TokenGrid:
    header = DumpHeader.unpack(blob)
    body = blob[header.header_size :]
    if len(body) != header.payload_size:
        raise DumpFormatError(
            f"payload length {len(body)} disagrees with header (expected {header.payload_size})"
        )
    n, k = header.n_tokens, header.key_dim
    off = 0

    def take(count: int, dtype: str) -> np.ndarray:
        nonlocal off
        width = 4 * count
        arr = np.frombuffer(body, dtype=dtype, count=count, offset=off)
        off += width
        return arr

    scores = take(n, "<f4")
    positions = take(2 * n, "<i4").reshape(n, 2)
    subimage_ids = take(n, "<i4")
    keys = take(n * k, "<f4").reshape(n, k)
    kwargs = {}
    if header.extended:
        kwargs["cross_attention"] = take(n, "<f4")
        kwargs["self_attention"] = take(n, "<f4")
    return TokenGrid(
        scores=scores,
        positions=positions,
        keys=keys,
        subimage_ids=subimage_ids,
        grid_dims=header.grid_dims,
        **kwargs,
    )


def read_dump(source: str | Path | BinaryIO, fmt: str = "auto") -> TokenGrid:
    """Parse a dump back into a validated TokenGrid.

    ``fmt`` is "binary", "json", or "auto" (sniff the magic bytes).
    Structural problems raise DumpFormatError; a structurally sound dump
    whose data breaks a TokenGrid invariant raises ValidationError naming
    the field.
    """
    if hasattr(source, "read"):
        blob = source.read()
    else:
        blob = Path(source).read_bytes()
    if fmt == "auto":
        fmt = "binary" if blob[:4] == MAGIC else "json"
    if fmt == "binary":
        return _read_binary(blob)
    if fmt == "json":
        return _read_json(blob)
    raise ValidationError(f"format: unknown dump format {fmt!r}; valid: binary, json, auto")
