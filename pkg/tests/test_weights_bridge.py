from __future__ import annotations

import os
import subprocess
import sys

import pytest

from mlcforge.bridge import (
    BridgeClient,
    BridgeError,
    BridgeTimeout,
    decode_frame,
    encode_request,
    encode_response,
    parse_payload,
)
from mlcforge.model import ConfigTree, EnumToken
from mlcforge.weights import (
    ArchiveError,
    ParamBlock,
    WeightArchive,
    archive_bytes,
    archive_io_shapes,
    import_resolver_for,
    read_archive,
    read_manifest,
    write_archive,
)

from conftest import MOCK_BRIDGE


def sample_archive() -> WeightArchive:
    manifest = ConfigTree(
        (
            ("layer_sizes", (4, 5, 3)),
            ("activations", (EnumToken("relu"),)),
            ("output_activation", EnumToken("softmax")),
            ("epochs", 5),
            ("metric", 0.93),
        )
    )
    params = (
        ParamBlock("w0", (4, 5), tuple(float(i) / 7 for i in range(20))),
        ParamBlock("b0", (5,), (0.0, 0.1, 0.2, 0.3, 0.4)),
        ParamBlock("w1", (5, 3), tuple(float(i) for i in range(15))),
        ParamBlock("b1", (3,), (0.0, 0.0, 0.0)),
    )
    opt_meta = ConfigTree((("kind", EnumToken("adam")), ("step_count", 40), ("learning_rate", 0.001)))
    opt_params = (ParamBlock("m.w0", (4, 5), tuple([0.5] * 20)),)
    return WeightArchive(manifest, params, opt_meta, opt_params)


def _quantize_f32(archive: WeightArchive) -> WeightArchive:
    import struct

    def q(block: ParamBlock) -> ParamBlock:
        values = struct.unpack(f"<{len(block.values)}f", struct.pack(f"<{len(block.values)}f", *block.values))
        return ParamBlock(block.name, block.dims, values)

    return WeightArchive(
        archive.manifest,
        tuple(q(p) for p in archive.params),
        archive.opt_meta,
        tuple(q(p) for p in archive.opt_params),
    )


def test_archive_round_trip_bit_exact_at_f32(tmp_path):
    path = str(tmp_path / "model.mlcw")
    digest = write_archive(path, sample_archive())
    assert len(digest) == 64
    loaded = read_archive(path)
    assert loaded == _quantize_f32(sample_archive())
    # a second save/load cycle changes nothing
    path2 = str(tmp_path / "model2.mlcw")
    write_archive(path2, loaded)
    assert read_archive(path2) == loaded


def test_archive_bytes_deterministic():
    assert archive_bytes(sample_archive()) == archive_bytes(sample_archive())


def test_trailer_detects_corruption(tmp_path):
    path = str(tmp_path / "model.mlcw")
    write_archive(path, sample_archive())
    data = bytearray(open(path, "rb").read())
    data[40] ^= 0xFF
    open(path, "wb").write(bytes(data))
    with pytest.raises(ArchiveError):
        read_archive(path)


def test_read_manifest_only(tmp_path):
    path = str(tmp_path / "model.mlcw")
    write_archive(path, sample_archive())
    manifest = read_manifest(path)
    assert manifest.get("layer_sizes") == (4, 5, 3)
    assert archive_io_shapes(path) == ((4,), (3,))


def test_import_resolver(tmp_path):
    write_archive(str(tmp_path / "pre.mlcw"), sample_archive())
    resolve = import_resolver_for(str(tmp_path))
    assert resolve("pre.mlcw") == ((4,), (3,))
    assert resolve("missing.mlcw") is None


def test_f32_round_trip_precision(tmp_path):
    import struct

    value = 0.1  # not representable exactly in f32
    archive = WeightArchive(
        ConfigTree((("layer_sizes", (1, 1)),)),
        (ParamBlock("w0", (1,), (value,)),),
    )
    path = str(tmp_path / "p.mlcw")
    write_archive(path, archive)
    loaded = read_archive(path)
    expected = struct.unpack("<f", struct.pack("<f", value))[0]
    assert loaded.params[0].values[0] == expected


# -- frames ------------------------------------------------------------------

def test_frame_encode_decode():
    payload = ConfigTree((("archive", "w.mlcw"), ("nested", ConfigTree((("a", 1),)))))
    line = encode_request(7, "LOAD", payload)
    frame = decode_frame(line)
    assert frame is not None
    assert (frame.kind, frame.id, frame.verb_or_status) == ("REQ", 7, "LOAD")
    assert parse_payload(frame.payload).get("archive") == "w.mlcw"


def test_err_response_encoding():
    line = encode_response(3, False, "no-model")
    frame = decode_frame(line)
    assert frame.verb_or_status == "ERR"
    assert frame.payload == "no-model"


def test_decode_garbage_returns_none():
    assert decode_frame("not a frame") is None
    assert decode_frame("RES x OK {}") is None
    assert decode_frame("") is None


# -- client against the mock server -------------------------------------------

def _client(tmp_path, timeout=30.0) -> BridgeClient:
    return BridgeClient([sys.executable, MOCK_BRIDGE], cwd=str(tmp_path), timeout=timeout)


def test_client_predict_before_load_is_error(tmp_path):
    with _client(tmp_path) as client:
        with pytest.raises(BridgeError, match="no-model"):
            client.call("PREDICT", ConfigTree((("features", (1.0, 2.0)),)))


def test_client_load_then_predict(tmp_path):
    archive = str(tmp_path / "m.mlcw")
    write_archive(archive, sample_archive())
    with _client(tmp_path) as client:
        response = client.call("LOAD", ConfigTree((("archive", archive),)))
        assert response.get("layer_sizes") == (4, 5, 3)
        out = client.call("PREDICT", ConfigTree((("features", (1.0, 1.0, 1.0, 1.0)),)))
        assert isinstance(out.get("output"), tuple)
        assert len(out.get("output")) == 3


def test_client_survives_garbage_line(tmp_path):
    archive = str(tmp_path / "m.mlcw")
    write_archive(archive, sample_archive())
    client = _client(tmp_path)
    try:
        client._proc.stdin.write("garbage that is not a frame\n")
        client._proc.stdin.flush()
        response = client.call("LOAD", ConfigTree((("archive", archive),)))
        assert response.get("layer_sizes") == (4, 5, 3)
    finally:
        client.close()


def test_client_timeout(tmp_path):
    slow = tmp_path / "slow.py"
    slow.write_text("import time\nimport sys\nsys.stdin.readline()\ntime.sleep(30)\n")
    client = BridgeClient([sys.executable, str(slow)], timeout=0.3)
    with pytest.raises(BridgeTimeout):
        client.call("TRAIN", ConfigTree())


def test_client_reports_dead_server(tmp_path):
    dead = tmp_path / "dead.py"
    dead.write_text("import sys; sys.exit(0)\n")
    client = BridgeClient([sys.executable, str(dead)], timeout=5.0)
    with pytest.raises(BridgeError):
        client.call("TRAIN", ConfigTree())
