import hashlib
import os
import socket
import subprocess
import sys

import numpy as np
import pytest

from ttemb_export import ModelNotFound, NotAnEmbedding, export
from ttemb_export.exporter import read_emb1_payload

TTEMB = [sys.executable, "-m", "ttemb.cli"]


def has_network(host="huggingface.co", port=443, timeout=3.0) -> bool:
    try:
        socket.create_connection((host, port), timeout=timeout).close()
        return True
    except OSError:
        return False


@pytest.fixture
def table():
    return np.random.default_rng(11).standard_normal((4, 8)).astype(np.float32)


@pytest.fixture
def npz_checkpoint(tmp_path, table):
    path = tmp_path / "weights.npz"
    np.savez(path, **{"wte.weight": table, "wpe.weight": np.zeros((16, 8), dtype=np.float32)})
    return path


def test_export_npz_manifest(tmp_path, npz_checkpoint, table):
    out = tmp_path / "tok.emb1"
    manifest = export(str(npz_checkpoint), "token", str(out))
    assert (manifest.V, manifest.d) == (4, 8)
    assert manifest.table == "token"
    assert manifest.dtype == "float32"
    assert manifest.sha256 == hashlib.sha256(table.astype("<f4").tobytes()).hexdigest()
    # header (4 + 2 + 8 + 4) + 128-byte payload + crc32
    assert os.path.getsize(out) == 18 + 4 * 8 * 4 + 4
    np.testing.assert_array_equal(read_emb1_payload(str(out)), table)


def test_export_position_table(tmp_path, npz_checkpoint):
    out = tmp_path / "pos.emb1"
    manifest = export(str(npz_checkpoint), "position", str(out))
    assert manifest.V == 16
    assert manifest.d == 8


def test_digest_matches_written_payload(tmp_path, npz_checkpoint):
    out = tmp_path / "tok.emb1"
    manifest = export(str(npz_checkpoint), "token", str(out))
    blob = out.read_bytes()
    assert hashlib.sha256(blob[18:-4]).hexdigest() == manifest.sha256


def test_rows_never_reordered(tmp_path):
    table = np.arange(32, dtype=np.float32).reshape(4, 8)
    path = tmp_path / "weights.npz"
    np.savez(path, **{"embed_tokens.weight": table})
    out = tmp_path / "tok.emb1"
    export(str(path), "token", str(out))
    np.testing.assert_array_equal(read_emb1_payload(str(out)), table)


def test_torch_state_dict_checkpoint(tmp_path, table):
    torch = pytest.importorskip("torch")
    path = tmp_path / "pytorch_model.bin"
    torch.save({"transformer.wte.weight": torch.from_numpy(table.copy())}, path)
    out = tmp_path / "tok.emb1"
    manifest = export(str(path), "token", str(out))
    assert (manifest.V, manifest.d) == (4, 8)
    np.testing.assert_array_equal(read_emb1_payload(str(out)), table)


def test_torch_bfloat16_source_dtype(tmp_path):
    torch = pytest.importorskip("torch")
    path = tmp_path / "model.pt"
    torch.save({"wte.weight": torch.zeros((3, 4), dtype=torch.bfloat16)}, path)
    manifest = export(str(path), "token", str(tmp_path / "t.emb1"))
    assert manifest.dtype == "bfloat16"


def test_safetensors_checkpoint(tmp_path, table):
    st = pytest.importorskip("safetensors.numpy")
    path = tmp_path / "model.safetensors"
    st.save_file({"wte.weight": table}, str(path))
    manifest = export(str(path), "token", str(tmp_path / "t.emb1"))
    assert (manifest.V, manifest.d) == (4, 8)


def test_checkpoint_directory_resolution(tmp_path, table):
    np.savez(tmp_path / "weights.npz", **{"wte.weight": table})
    manifest = export(str(tmp_path), "token", str(tmp_path / "t.emb1"))
    assert manifest.V == 4


def test_model_not_found(tmp_path):
    with pytest.raises(ModelNotFound):
        export(str(tmp_path / "nope.npz"), "token", str(tmp_path / "t.emb1"))
    np.savez(tmp_path / "weights.npz", **{"something_else": np.zeros((2, 2), dtype=np.float32)})
    with pytest.raises(ModelNotFound):
        export(str(tmp_path / "weights.npz"), "token", str(tmp_path / "t.emb1"))


def test_not_an_embedding(tmp_path):
    np.savez(tmp_path / "weights.npz", **{"wte.weight": np.zeros((2, 2, 2), dtype=np.float32)})
    with pytest.raises(NotAnEmbedding):
        export(str(tmp_path / "weights.npz"), "token", str(tmp_path / "t.emb1"))


def test_cli_prints_manifest(tmp_path, npz_checkpoint):
    out = tmp_path / "tok.emb1"
    proc = subprocess.run(
        [sys.executable, "-m", "ttemb_export.cli", "--model", str(npz_checkpoint),
         "--table", "token", "--output", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    fields = dict(line.split("=", 1) for line in proc.stdout.strip().splitlines())
    assert fields["V"] == "4" and fields["d"] == "8"


def run_round_trip(emb_path, tmp_path, shape_flag):
    """exporter output -> toolkit compress (eps 0) -> export-dense -> compare."""
    store_path = tmp_path / "v.tte1"
    back_path = tmp_path / "back.emb1"
    for cmd in (
        TTEMB + ["compress", "--input", str(emb_path), "--output", str(store_path),
                 "--eps", "0", *shape_flag],
        TTEMB + ["export-dense", "--vocab", str(store_path), "--output", str(back_path)],
    ):
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    original = read_emb1_payload(str(emb_path))
    restored = read_emb1_payload(str(back_path))
    np.testing.assert_array_max_ulp(original, restored, maxulp=16)


def test_round_trip_through_toolkit_synthetic(tmp_path, npz_checkpoint):
    out = tmp_path / "tok.emb1"
    export(str(npz_checkpoint), "token", str(out))
    run_round_trip(out, tmp_path, ["--shape", "2,2,2"])


@pytest.mark.skipif(not has_network(), reason="no network access to the model hub")
def test_round_trip_real_checkpoint(tmp_path):
    out = tmp_path / "real.emb1"
    manifest = export(os.environ.get("TTEMB_EXPORT_REAL_MODEL", "distilgpt2"), "token", str(out))
    assert manifest.V > 1000 and manifest.d >= 64
    run_round_trip(out, tmp_path, ["--auto-shape", "order:3"])
