"""Pull embedding tables out of pretrained checkpoints and write EMB1 files.

Sources: safetensors files, PyTorch state-dict files (.pt / .bin / .pth),
numpy .npz archives, local checkpoint directories, or a model id resolvable
on the Hugging Face hub.  The token (or position) embedding tensor is found
by its customary parameter names, or an explicit tensor name wins.  Rows
are never reordered: token id equals row index, exactly as the tokenizer
defined it.

The EMB1 output follows the compression toolkit's dense interchange format
(little-endian: magic "EMB1", version u16, V u64, d u32, row-major float32
payload, CRC32 of all preceding bytes).  This package speaks the format
only; the toolkit itself is consumed through its files and CLI, never
imported.
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile
import zlib
from dataclasses import dataclass

import numpy as np

EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1
_EMB1_HEADER = struct.Struct("<4sHQI")

TOKEN_NAME_HINTS = (
    "wte.weight",
    "transformer.wte.weight",
    "model.embed_tokens.weight",
    "embed_tokens.weight",
    "word_embeddings.weight",
    "embeddings.word_embeddings.weight",
    "tok_embeddings.weight",
    "shared.weight",
    "wte",
)
POSITION_NAME_HINTS = (
    "wpe.weight",
    "transformer.wpe.weight",
    "position_embeddings.weight",
    "embeddings.position_embeddings.weight",
    "embed_positions.weight",
    "wpe",
)
_CHECKPOINT_FILENAMES = (
    "model.safetensors",
    "pytorch_model.bin",
    "model.bin",
    "model.pt",
    "weights.npz",
)


class ModelNotFound(Exception):
    """No checkpoint at the given location, or no matching tensor inside it."""


class NotAnEmbedding(Exception):
    """The selected tensor is not a 2-d table."""


@dataclass(frozen=True)
class ExportManifest:
    model: str
    table: str
    V: int
    d: int
    dtype: str
    path: str
    sha256: str

    def kv_lines(self) -> list[str]:
        return [f"{k}={getattr(self, k)}" for k in ("model", "table", "V", "d", "dtype", "path", "sha256")]


def encode_emb1(table: np.ndarray) -> bytes:
    v, d = table.shape
    payload = np.ascontiguousarray(table, dtype="<f4").tobytes()
    body = _EMB1_HEADER.pack(EMB1_MAGIC, EMB1_VERSION, v, d) + payload
    return body + struct.pack("<I", zlib.crc32(body))


def read_emb1_payload(path: str) -> np.ndarray:
    """Float32 table straight from an EMB1 file (checksum verified)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if blob[:4] != EMB1_MAGIC or zlib.crc32(body) != crc:
        raise ValueError(f"{path} is not a valid EMB1 file")
    magic, version, v, d = _EMB1_HEADER.unpack_from(body)
    return np.frombuffer(body, dtype="<f4", count=v * d, offset=_EMB1_HEADER.size).reshape(v, d)


def _to_numpy(value) -> tuple[np.ndarray, str]:
    """Any checkpoint tensor to a float64 array plus its source dtype name."""
    if isinstance(value, np.ndarray):
        return value.astype(np.float64), str(value.dtype)
    try:
        import torch
    except ImportError:
        torch = None
    if torch is not None and isinstance(value, torch.Tensor):
        dtype = str(value.dtype).removeprefix("torch.")
        return value.detach().to(torch.float64).cpu().numpy(), dtype
    arr = np.asarray(value)
    return arr.astype(np.float64), str(arr.dtype)


def _load_state(path: str) -> dict:
    suffix = os.path.splitext(path)[1].lower()
    if suffix == ".safetensors":
        try:
            from safetensors.numpy import load_file

            return load_file(path)
        except Exception:
            from safetensors.torch import load_file as load_torch

            return load_torch(path)
    if suffix == ".npz":
        return dict(np.load(path))
    if suffix in (".pt", ".pth", ".bin"):
        import torch

        state = torch.load(path, map_location="cpu", weights_only=True)
        if hasattr(state, "state_dict"):
            state = state.state_dict()
        if not isinstance(state, dict):
            raise ModelNotFound(f"{path} does not contain a state dict")
        return state
    raise ModelNotFound(f"unrecognized checkpoint format: {path}")


def _resolve_source(model_id: str) -> str:
    if os.path.isfile(model_id):
        return model_id
    if os.path.isdir(model_id):
        for name in _CHECKPOINT_FILENAMES:
            candidate = os.path.join(model_id, name)
            if os.path.isfile(candidate):
                return candidate
        raise ModelNotFound(f"no checkpoint file inside {model_id}")
    # Treat anything else as a hub model id.
    try:
        from huggingface_hub import hf_hub_download
    except ImportError:
        raise ModelNotFound(
            f"{model_id} is not a local path and huggingface_hub is not installed"
        ) from None
    last_error: Exception | None = None
    for name in ("model.safetensors", "pytorch_model.bin"):
        try:
            return hf_hub_download(model_id, name)
        except Exception as exc:
            last_error = exc
    raise ModelNotFound(f"could not fetch {model_id}: {last_error}") from last_error


def pick_tensor(state: dict, table_kind: str, tensor_name: str | None = None):
    if tensor_name is not None:
        if tensor_name not in state:
            raise ModelNotFound(f"tensor {tensor_name!r} not in checkpoint")
        return tensor_name, state[tensor_name]
    hints = TOKEN_NAME_HINTS if table_kind == "token" else POSITION_NAME_HINTS
    for hint in hints:
        for key in state:
            if key == hint or key.endswith("." + hint):
                return key, state[key]
    raise ModelNotFound(f"no {table_kind} embedding tensor found among {sorted(state)[:8]}...")


def export(
    model_id: str,
    table_kind: str = "token",
    out_path: str = "table.emb1",
    tensor_name: str | None = None,
) -> ExportManifest:
    """Extract one embedding table and write it as EMB1.

    The payload digest is computed before anything touches disk; the file is
    then written to a temp path and atomically renamed.
    """
    if table_kind not in ("token", "position"):
        raise ValueError(f"table_kind must be 'token' or 'position', got {table_kind!r}")
    source = _resolve_source(model_id)
    state = _load_state(source)
    name, raw = pick_tensor(state, table_kind, tensor_name)
    table, dtype = _to_numpy(raw)
    if table.ndim != 2:
        raise NotAnEmbedding(f"{name} has rank {table.ndim}, expected a 2-d table")

    payload = np.ascontiguousarray(table, dtype="<f4").tobytes()
    digest = hashlib.sha256(payload).hexdigest()

    blob = encode_emb1(table)
    directory = os.path.dirname(out_path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, out_path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise

    return ExportManifest(
        model=model_id, table=table_kind, V=table.shape[0], d=table.shape[1],
        dtype=dtype, path=out_path, sha256=digest,
    )
