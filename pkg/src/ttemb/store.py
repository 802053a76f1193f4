"""Persistent compressed vocabulary: token id -> tensor-train cores.

The store owns the TTE1 on-disk format::

    magic    4 bytes   b"TTE1"
    version  u16       currently 1
    d        u32       embedding dimension
    N        u8        tensor order
    shape    N x u32   mode sizes (I_1, ..., I_N)
    epsilon  f64       the store-wide accuracy target
    count    u64       number of entries
    index    per entry: token id u64, payload byte offset u64,
             ranks (N+1) x u16
    payload  per entry: cores 1..N concatenated, each flattened
             little-endian, float32
    crc32    u32       of all preceding bytes

Everything is little-endian.  Serialization is canonical (entries sorted
by token id, offsets cumulative), so two stores with equal contents are
byte-identical regardless of insertion history.  Offsets are relative to
the start of the payload region, allowing random access without parsing
every entry's cores.

Snapshot semantics: add_token / remove_token return a new vocabulary
sharing the untouched entries.  Any number of readers may use a snapshot
concurrently; writers must coordinate externally (the CLI takes an
advisory file lock).
"""

from __future__ import annotations

import datetime as _dt
import math
import struct
import zlib
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import CorruptFile, DuplicateToken, ShapeMismatch, TokenNotFound, VersionMismatch
from .formats import atomic_write_bytes
from .ttsvd import CompressSpec, TTVector, param_count, reconstruct, structural_max_ranks, tt_svd

TTE1_MAGIC = b"TTE1"
TTE1_VERSION = 1
_HEADER = struct.Struct("<4sHIB")
_EPS_COUNT = struct.Struct("<dQ")
_CRC = struct.Struct("<I")
_MAX_RANK_U16 = 0xFFFF


def _fresh_metadata(model: str | None) -> dict:
    return {
        "model": model,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "format_version": TTE1_VERSION,
    }


@dataclass
class CompressedVocab:
    """An immutable snapshot of a compressed vocabulary.

    All entries share the global shape and accuracy target; ranks vary per
    token.  Metadata is in-memory convenience only and is not persisted.
    """

    spec: CompressSpec
    entries: Mapping[int, TTVector] = field(repr=False)
    metadata: dict = field(default_factory=lambda: _fresh_metadata(None))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.spec.shape

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def epsilon(self) -> float:
        return self.spec.epsilon

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token_id: int) -> bool:
        return token_id in self.entries

    @property
    def total_params(self) -> int:
        return sum(param_count(tt) for tt in self.entries.values())

    @property
    def eta_emb(self) -> float:
        """Reduction fraction (V d - stored params) / (V d); 0 for empty."""
        dense = len(self.entries) * self.d
        if dense == 0:
            return 0.0
        return (dense - self.total_params) / dense

    def add_token(self, token_id: int, embedding) -> "CompressedVocab":
        """Compress one new embedding under the store spec; returns a new snapshot."""
        token_id = int(token_id)
        if token_id < 0:
            raise ShapeMismatch(f"token ids must be >= 0, got {token_id}")
        if token_id in self.entries:
            raise DuplicateToken(f"token {token_id} already present")
        vec = np.asarray(embedding, dtype=np.float64).ravel()
        if vec.size != self.d:
            raise ShapeMismatch(f"embedding length {vec.size} != store dim {self.d}")
        entries = dict(self.entries)
        entries[token_id] = tt_svd(vec, self.spec)
        return CompressedVocab(self.spec, entries, dict(self.metadata))

    def remove_token(self, token_id: int) -> "CompressedVocab":
        if token_id not in self.entries:
            raise TokenNotFound(f"token {token_id} not present")
        entries = dict(self.entries)
        del entries[token_id]
        return CompressedVocab(self.spec, entries, dict(self.metadata))

    def lookup(self, token_id: int) -> np.ndarray:
        """Reconstruct the dense length-d embedding for one token."""
        try:
            tt = self.entries[token_id]
        except KeyError:
            raise TokenNotFound(f"token {token_id} not present") from None
        return reconstruct(tt)

    def lookup_batch(self, token_ids) -> np.ndarray:
        """Dense rows for l tokens; allocates exactly l * d output scalars."""
        ids = list(token_ids)
        out = np.empty((len(ids), self.d))
        for row, token_id in enumerate(ids):
            out[row] = self.lookup(token_id)
        return out

    def rank_histogram(self) -> dict[int, int]:
        """Occurrences of each interior rank value across all entries."""
        hist: dict[int, int] = {}
        for tt in self.entries.values():
            for r in tt.ranks[1:-1]:
                hist[r] = hist.get(r, 0) + 1
        return dict(sorted(hist.items()))

    def to_bytes(self) -> bytes:
        return _encode_tte1(self)

    def save(self, path) -> None:
        """Serialize canonically and write crash-safely (temp file + rename)."""
        atomic_write_bytes(path, self.to_bytes())


def build(table: np.ndarray, spec: CompressSpec, model: str | None = None) -> CompressedVocab:
    """Compress every row of a V x d table; row index becomes the token id."""
    table = np.asarray(table, dtype=np.float64)
    if table.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d table, got shape {table.shape}")
    if table.shape[1] != spec.d:
        raise ShapeMismatch(f"table dim {table.shape[1]} != prod{spec.shape} = {spec.d}")
    entries = {i: tt_svd(table[i], spec) for i in range(table.shape[0])}
    return CompressedVocab(spec, entries, _fresh_metadata(model))


def _encode_tte1(vocab: CompressedVocab) -> bytes:
    shape = vocab.shape
    n = len(shape)
    parts = [
        _HEADER.pack(TTE1_MAGIC, TTE1_VERSION, vocab.d, n),
        struct.pack(f"<{n}I", *shape),
        _EPS_COUNT.pack(vocab.epsilon, len(vocab.entries)),
    ]
    index = []
    payloads = []
    offset = 0
    for token_id in sorted(vocab.entries):
        tt = vocab.entries[token_id]
        if any(r > _MAX_RANK_U16 for r in tt.ranks):
            raise ShapeMismatch(f"rank exceeds u16 range in token {token_id}")
        blob = b"".join(
            np.asarray(core, dtype="<f4").ravel(order="F").tobytes() for core in tt.cores
        )
        index.append(struct.pack(f"<QQ{n + 1}H", token_id, offset, *tt.ranks))
        payloads.append(blob)
        offset += len(blob)
    body = b"".join(parts + index + payloads)
    return body + _CRC.pack(zlib.crc32(body))


def _decode_tte1(blob: bytes) -> CompressedVocab:
    if len(blob) < _HEADER.size or blob[:4] != TTE1_MAGIC:
        raise CorruptFile("not a TTE1 file (bad magic)")
    if len(blob) < _CRC.size:
        raise CorruptFile("TTE1: file shorter than its checksum")
    body, crc_bytes = blob[: -_CRC.size], blob[-_CRC.size :]
    (crc,) = _CRC.unpack(crc_bytes)
    if zlib.crc32(body) != crc:
        raise CorruptFile("TTE1: checksum mismatch")

    pos = 0

    def take(fmt_size: int) -> bytes:
        nonlocal pos
        if pos + fmt_size > len(body):
            raise CorruptFile("TTE1: truncated header or index")
        chunk = body[pos : pos + fmt_size]
        pos += fmt_size
        return chunk

    magic, version, d, n = _HEADER.unpack(take(_HEADER.size))
    if version != TTE1_VERSION:
        raise VersionMismatch(f"TTE1 version {version}, expected {TTE1_VERSION}")
    if not 1 <= n <= 16:
        raise CorruptFile(f"TTE1: tensor order {n} outside 1..16")
    shape = struct.unpack(f"<{n}I", take(4 * n))
    if any(s < 1 for s in shape):
        raise CorruptFile(f"TTE1: invalid shape {shape}")
    if math.prod(shape) != d:
        raise CorruptFile(f"TTE1: prod{shape} != d = {d}")
    epsilon, count = _EPS_COUNT.unpack(take(_EPS_COUNT.size))
    if not (math.isfinite(epsilon) and epsilon >= 0.0):
        raise CorruptFile(f"TTE1: invalid epsilon {epsilon}")

    entry_fmt = struct.Struct(f"<QQ{n + 1}H")
    records = []
    for _ in range(count):
        fields = entry_fmt.unpack(take(entry_fmt.size))
        records.append((fields[0], fields[1], fields[2:]))

    payload = body[pos:]
    entries: dict[int, TTVector] = {}
    for token_id, offset, ranks in records:
        if token_id in entries:
            raise CorruptFile(f"TTE1: duplicate token id {token_id}")
        if ranks[0] != 1 or ranks[-1] != 1:
            raise CorruptFile(f"TTE1: boundary ranks must be 1, got {ranks}")
        size = sum(ranks[k] * shape[k] * ranks[k + 1] for k in range(n))
        if offset + size * 4 > len(payload):
            raise CorruptFile("TTE1: core payload out of bounds")
        flat = np.frombuffer(payload, dtype="<f4", count=size, offset=offset).astype(np.float64)
        cores = []
        cursor = 0
        for k in range(n):
            csize = ranks[k] * shape[k] * ranks[k + 1]
            cores.append(
                flat[cursor : cursor + csize].reshape(
                    (ranks[k], shape[k], ranks[k + 1]), order="F"
                )
            )
            cursor += csize
        entries[token_id] = TTVector(shape, tuple(ranks), cores)

    spec = CompressSpec(shape=shape, max_ranks=structural_max_ranks(shape), epsilon=epsilon)
    return CompressedVocab(spec, entries, _fresh_metadata(None))


def load(path) -> CompressedVocab:
    """Read and validate a TTE1 file (magic, version, checksum, bounds)."""
    with open(path, "rb") as fh:
        return _decode_tte1(fh.read())
