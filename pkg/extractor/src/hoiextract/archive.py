"""HOIE embedding archive writer (and reader, for round-trip checks).

Layout (little-endian): magic "HOIE", version u32 = 1, dim u32, count u64,
then per record: key_len u16, UTF-8 key, dim float32 values. This mirrors the
consumer's documented format bit for bit.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import InputError

MAGIC = b"HOIE"
VERSION = 1


def write_archive(path, dim: int, items) -> int:
    """Write (key, vector) records in iteration order; returns the count.

    Vectors are cast to float32 and must already be L2-normalized; the
    consumer rejects norms off by more than 1e-3.
    """
    items = list(items)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IIQ", VERSION, dim, len(items)))
        for key, vec in items:
            arr = np.asarray(vec, dtype="<f4")
            if arr.shape != (dim,):
                raise InputError(
                    f"vector {key!r} has shape {arr.shape}, expected ({dim},)")
            raw = key.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(arr.tobytes())
    return len(items)


def read_archive(path) -> tuple[int, dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        header = f.read(20)
        if len(header) < 20 or header[:4] != MAGIC:
            raise InputError(f"{path}: not an HOIE archive")
        version, dim = struct.unpack("<II", header[4:12])
        (count,) = struct.unpack("<Q", header[12:20])
        if version != VERSION:
            raise InputError(f"{path}: unsupported version {version}")
        entries = {}
        for i in range(count):
            (key_len,) = struct.unpack("<H", f.read(2))
            key = f.read(key_len).decode("utf-8")
            entries[key] = np.frombuffer(f.read(4 * dim), dtype="<f4")
        return dim, entries
