"""Binary file plumbing: the EMB1 dense format and crash-safe writes.

EMB1 is the dense interchange format for embedding tables::

    magic   4 bytes  b"EMB1"
    version u16      currently 1
    V       u64      row count
    d       u32      embedding dimension
    payload V*d*4    row-major float32
    crc32   u32      of all preceding bytes

All integers and floats are little-endian.  Writers narrow to float32 at
this boundary only; readers hand back float64 for downstream math.
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib

import numpy as np

from .errors import CorruptFile, ShapeMismatch, VersionMismatch

EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1
_EMB1_HEADER = struct.Struct("<4sHQI")
_CRC = struct.Struct("<I")


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write a file fully, fsync, then atomically rename over the target.

    A crash at any point leaves either the old file or the new one, never a
    torn mix; stray temp files are cleaned up on error.
    """
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix="." + os.path.basename(path) + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _check_crc(blob: bytes, what: str) -> bytes:
    if len(blob) < _CRC.size:
        raise CorruptFile(f"{what}: file shorter than its checksum")
    body, crc_bytes = blob[: -_CRC.size], blob[-_CRC.size :]
    (crc,) = _CRC.unpack(crc_bytes)
    if zlib.crc32(body) != crc:
        raise CorruptFile(f"{what}: checksum mismatch")
    return body


def encode_emb1(table: np.ndarray) -> bytes:
    """Serialize a V x d table to EMB1 bytes."""
    table = np.asarray(table)
    if table.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d table, got shape {table.shape}")
    v, d = table.shape
    payload = np.ascontiguousarray(table, dtype="<f4").tobytes()
    body = _EMB1_HEADER.pack(EMB1_MAGIC, EMB1_VERSION, v, d) + payload
    return body + _CRC.pack(zlib.crc32(body))


def decode_emb1(blob: bytes) -> np.ndarray:
    """Parse EMB1 bytes into a float64 V x d table."""
    if len(blob) < _EMB1_HEADER.size or blob[:4] != EMB1_MAGIC:
        raise CorruptFile("not an EMB1 file (bad magic)")
    body = _check_crc(blob, "EMB1")
    magic, version, v, d = _EMB1_HEADER.unpack_from(body)
    if version != EMB1_VERSION:
        raise VersionMismatch(f"EMB1 version {version}, expected {EMB1_VERSION}")
    expected = _EMB1_HEADER.size + v * d * 4
    if len(body) != expected:
        raise CorruptFile(f"EMB1 payload is {len(body) - _EMB1_HEADER.size} bytes, expected {v * d * 4}")
    flat = np.frombuffer(body, dtype="<f4", count=v * d, offset=_EMB1_HEADER.size)
    return flat.astype(np.float64).reshape(v, d)


def write_emb1(path: str | os.PathLike, table: np.ndarray) -> None:
    atomic_write_bytes(path, encode_emb1(table))


def read_emb1(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_emb1(fh.read())
