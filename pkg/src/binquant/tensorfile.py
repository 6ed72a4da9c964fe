"""Binary container for named float64 tensors, plus checkpoint helpers.

Wire layout (all integers little-endian):

    magic   4 bytes  b"QTNS"
    version 1 byte   currently 1
    count   u32      number of entries
    entry*  count times:
        name_len u16, then name_len bytes of UTF-8 name
        dtype    1 byte   (0 = float64; the only dtype so far)
        rank     1 byte
        dims     rank u64 values
        payload  prod(dims) little-endian float64, row-major

Bytes after the last declared entry are ignored by the tensor reader; the
checkpoint writer uses that slack to append a one-line JSON manifest.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .mlp import ParamSet

__all__ = [
    "MAGIC",
    "VERSION",
    "TensorFileError",
    "BadMagicError",
    "UnsupportedVersionError",
    "TruncatedFileError",
    "dump_tensors",
    "parse_tensors",
    "write_tensors",
    "read_tensors",
    "save_checkpoint",
    "load_checkpoint",
]

MAGIC = b"QTNS"
VERSION = 1
_DTYPE_F64 = 0


class TensorFileError(ValueError):
    """Malformed tensor container."""


class BadMagicError(TensorFileError):
    pass


class UnsupportedVersionError(TensorFileError):
    pass


class TruncatedFileError(TensorFileError):
    pass


def dump_tensors(entries) -> bytes:
    """Serialize name -> array pairs (a mapping or (name, array) sequence);
    entry order is preserved."""
    pairs = list(entries.items()) if hasattr(entries, "items") else list(entries)
    seen = set()
    out = [MAGIC, bytes([VERSION]), struct.pack("<I", len(pairs))]
    for name, arr in pairs:
        if not name:
            raise ValidationError("tensor names must be non-empty")
        if name in seen:
            raise ValidationError(f"duplicate tensor name {name!r}")
        seen.add(name)
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValidationError(f"tensor name too long: {len(raw)} bytes")
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim > 0xFF:
            raise ValidationError(f"rank {arr.ndim} exceeds the format cap of 255")
        out.append(struct.pack("<H", len(raw)))
        out.append(raw)
        out.append(bytes([_DTYPE_F64, arr.ndim]))
        out.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        out.append(arr.astype("<f8").tobytes(order="C"))
    return b"".join(out)


def parse_tensors(data: bytes) -> tuple[dict[str, np.ndarray], int]:
    """Parse a container; returns (entries in file order, bytes consumed).

    Trailing bytes beyond the declared entries are left for the caller.
    """
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise TruncatedFileError(f"file ends inside {what} (need {n} bytes at offset {pos})")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    magic = take(4, "magic")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version = take(1, "version")[0]
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")
    (count,) = struct.unpack("<I", take(4, "entry count"))
    entries: dict[str, np.ndarray] = {}
    for i in range(count):
        (name_len,) = struct.unpack("<H", take(2, f"entry {i} name length"))
        name = take(name_len, f"entry {i} name").decode("utf-8")
        if name in entries:
            raise TensorFileError(f"duplicate tensor name {name!r} in file")
        dtype = take(1, f"entry {i} dtype")[0]
        if dtype != _DTYPE_F64:
            raise TensorFileError(f"entry {name!r} has unsupported dtype byte {dtype}")
        rank = take(1, f"entry {i} rank")[0]
        dims = struct.unpack(f"<{rank}Q", take(8 * rank, f"entry {i} dims"))
        n = 1
        for d in dims:
            n *= d
        payload = take(8 * n, f"entry {name!r} payload")
        entries[name] = np.frombuffer(payload, dtype="<f8").reshape(dims).copy()
    return entries, pos


def write_tensors(path, entries) -> None:
    Path(path).write_bytes(dump_tensors(entries))


def read_tensors(path) -> dict[str, np.ndarray]:
    return parse_tensors(Path(path).read_bytes())[0]


def save_checkpoint(path, params: ParamSet, manifest: dict) -> None:
    """Container with entries w0, b0, w1, b1, ... plus a trailing JSON
    manifest line (model dims, seed, anything else the caller records)."""
    entries = []
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        entries.append((f"w{i}", w))
        entries.append((f"b{i}", b))
    blob = dump_tensors(entries) + b"\n" + json.dumps(manifest, sort_keys=True).encode("utf-8") + b"\n"
    Path(path).write_bytes(blob)


def load_checkpoint(path) -> tuple[ParamSet, dict]:
    data = Path(path).read_bytes()
    entries, consumed = parse_tensors(data)
    trailer = data[consumed:].strip()
    if not trailer:
        raise TensorFileError(f"checkpoint {path} is missing its manifest line")
    try:
        manifest = json.loads(trailer.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise TensorFileError(f"checkpoint {path} has a malformed manifest: {e}") from e
    n_layers = sum(1 for k in entries if k.startswith("w"))
    weights, biases = [], []
    for i in range(n_layers):
        if f"w{i}" not in entries or f"b{i}" not in entries:
            raise TensorFileError(f"checkpoint {path} is missing layer {i} entries")
        weights.append(entries[f"w{i}"])
        biases.append(entries[f"b{i}"])
    return ParamSet(weights, biases), manifest
