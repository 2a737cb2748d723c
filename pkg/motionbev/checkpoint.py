"""
BMOS binary tensor container.

Layout (all integers little-endian)::

    b"BMOS"  u32 version
    repeated:
        u32 name_length, name (utf-8)
        u32 rank, rank x u64 extents
        prod(extents) x f64 payload (little-endian, row-major)

The same container stores model checkpoints and dataset frame blobs.
"""

from __future__ import annotations

import math
import os
import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from .exceptions import CheckpointError, NonFiniteError, OutputError
from .validators import ensure_finite

MAGIC = b"BMOS"
VERSION = 1

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def encode_records(records: Mapping[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, _U32.pack(VERSION)]
    for name, value in records.items():
        arr = np.ascontiguousarray(value, dtype="<f8")
        encoded = name.encode("utf-8")
        chunks.append(_U32.pack(len(encoded)))
        chunks.append(encoded)
        chunks.append(_U32.pack(arr.ndim))
        chunks.extend(_U64.pack(extent) for extent in arr.shape)
        chunks.append(arr.tobytes())
    return b"".join(chunks)


def decode_records(blob: bytes, path: str | None = None) -> dict[str, np.ndarray]:
    """Parse a BMOS byte string. Raises CheckpointError naming the bad record."""
    if blob[:4] != MAGIC:
        raise CheckpointError(path=path, message="missing BMOS magic bytes")
    if len(blob) < 8:
        raise CheckpointError(path=path, message="truncated header")
    (version,) = _U32.unpack_from(blob, 4)
    if version != VERSION:
        raise CheckpointError(path=path, message=f"unsupported version {version}")

    records: dict[str, np.ndarray] = {}
    offset = 8
    name = None

    def take(count: int) -> int:
        nonlocal offset
        if offset + count > len(blob):
            raise CheckpointError(path=path, record=name, message="truncated record")
        start = offset
        offset += count
        return start

    while offset < len(blob):
        name = None
        (name_len,) = _U32.unpack_from(blob, take(4))
        start = take(name_len)
        raw = blob[start:offset]
        try:
            name = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointError(path=path, message="record name is not valid utf-8") from e
        if name in records:
            raise CheckpointError(path=path, record=name, message="duplicate record")
        (rank,) = _U32.unpack_from(blob, take(4))
        shape = tuple(_U64.unpack_from(blob, take(8))[0] for _ in range(rank))
        if any(extent > len(blob) for extent in shape):
            raise CheckpointError(
                path=path, record=name, message=f"extents {shape} exceed the file size"
            )
        count = math.prod(shape)
        start = take(8 * count)
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=start).reshape(shape)
        try:
            records[name] = ensure_finite(name, arr).astype(np.float64, copy=True)
        except NonFiniteError as e:
            raise CheckpointError(path=path, record=name, message=str(e)) from e
    return records


def save_checkpoint(path: str | Path, records: Mapping[str, np.ndarray]) -> Path:
    """Write records to ``path`` atomically (temp file + rename)."""
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_bytes(encode_records(records))
        os.replace(tmp, target)
    except OSError as e:
        raise OutputError(path=str(target), message=f"cannot write checkpoint: {e}") from e
    return target


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    target = Path(path)
    try:
        blob = target.read_bytes()
    except OSError as e:
        raise CheckpointError(path=str(target), message=f"cannot read file: {e}") from e
    return decode_records(blob, path=str(target))


def load_into(model, records: Mapping[str, np.ndarray], path: str | None = None) -> None:
    """Load the ``param/*`` records of a checkpoint into ``model``."""
    params = {k[len("param/") :]: v for k, v in records.items() if k.startswith("param/")}
    model.load_state_dict(params, path=path)
