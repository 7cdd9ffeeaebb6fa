from __future__ import annotations

import io
import os
import tarfile

import pytest

from mlcforge.buildsys import (
    MissingInput,
    Store,
    StoreRecord,
    execute,
    package_dataset,
    package_model,
    package_source,
    plan,
)

from conftest import load_analyzed


def test_index_round_trip(tmp_path):
    store = Store(str(tmp_path / "store"))
    store.ensure()
    record = StoreRecord("u", "a" * 64, "b" * 64, "c" * 64, 10, "weights/u-1.mlcw", 1)
    store.upsert(record)
    assert store.read_index() == [record]
    updated = StoreRecord("u", "a" * 64, "b" * 64, "d" * 64, 12, "weights/u-2.mlcw", 2)
    store.upsert(updated)
    assert store.read_index() == [updated]  # one record per unit
    assert store.candidates("u")[0].build_no == 2
    assert store.next_build_no() == 3


def test_index_write_is_atomic_rename(tmp_path):
    store = Store(str(tmp_path / "store"))
    store.ensure()
    store.upsert(StoreRecord("u", "a", "b", "c", 1, "p", 1))
    assert not os.path.exists(store.index_path + ".tmp")


def _trained_project(tmp_project, mock_launcher):
    analysis, _ = load_analyzed(tmp_project)
    store = Store(os.path.join(tmp_project, ".mlc-store"))
    report = execute(analysis, plan(analysis, store), store, mock_launcher(tmp_project))
    assert report.ok
    return analysis, store


def test_package_source_deterministic(tmp_project, mock_launcher):
    analysis, store = _trained_project(tmp_project, mock_launcher)
    out_a = os.path.join(tmp_project, "a.tar")
    out_b = os.path.join(tmp_project, "b.tar")
    package_source(analysis.unit, store, out_a)
    package_source(analysis.unit, store, out_b)
    assert open(out_a, "rb").read() == open(out_b, "rb").read()


def test_package_source_zeroed_metadata(tmp_project, mock_launcher):
    analysis, store = _trained_project(tmp_project, mock_launcher)
    out = os.path.join(tmp_project, "src.tar")
    package_source(analysis.unit, store, out)
    with tarfile.open(out) as tar:
        names = tar.getnames()
        assert names == sorted(names)
        for info in tar.getmembers():
            assert info.mtime == 0 and info.uid == 0 and info.gid == 0
        assert "mlc.project" in names
        manifest = tar.extractfile("MANIFEST").read().decode()
        assert 'kind: "source-archive"' in manifest


def test_package_model_records_dataset_digest(tmp_project, mock_launcher):
    analysis, store = _trained_project(tmp_project, mock_launcher)
    record = store.candidates("digits")[0]
    out = os.path.join(tmp_project, "digits-model.tar")
    artifact = package_model(analysis.unit, store, record, out)
    assert artifact.kind == "model-archive"
    assert artifact.dataset_digest == record.dataset_digest
    assert artifact.link == record.dataset_digest
    with tarfile.open(out) as tar:
        manifest = tar.extractfile("MANIFEST").read().decode()
        assert f"dataset_digest: \"{record.dataset_digest}\"" in manifest
        weights = tar.extractfile("weights.mlcw").read()
        assert weights.startswith(b"MLCW1\n")


def test_package_dataset_row_count_by_independent_scan(tmp_project, mock_launcher):
    analysis, store = _trained_project(tmp_project, mock_launcher)
    out = os.path.join(tmp_project, "digits-data.tar")
    artifact = package_dataset(analysis.unit, store, "data/digits.csv", out)
    # independent oracle: count non-empty lines minus the header
    with open(os.path.join(tmp_project, "data/digits.csv"), "r") as fh:
        expected = sum(1 for line in fh if line.strip()) - 1
    assert expected == 1000
    assert artifact.row_count == expected


def test_packaging_same_inputs_identical_bytes(tmp_project, mock_launcher):
    analysis, store = _trained_project(tmp_project, mock_launcher)
    record = store.candidates("digits")[0]
    out_a = os.path.join(tmp_project, "m1.tar")
    out_b = os.path.join(tmp_project, "m2.tar")
    package_model(analysis.unit, store, record, out_a)
    package_model(analysis.unit, store, record, out_b)
    assert open(out_a, "rb").read() == open(out_b, "rb").read()


def test_missing_input_raises(tmp_project, mock_launcher):
    analysis, store = _trained_project(tmp_project, mock_launcher)
    with pytest.raises(MissingInput):
        package_dataset(analysis.unit, store, "data/ghost.csv", os.path.join(tmp_project, "x.tar"))


def test_artifact_index_records(tmp_project, mock_launcher):
    analysis, store = _trained_project(tmp_project, mock_launcher)
    out = os.path.join(tmp_project, ".mlc-store", "packages", "src.tar")
    package_source(analysis.unit, store, out)
    records = store.read_artifacts()
    assert len(records) == 1
    assert records[0].kind == "source-archive" and records[0].path == out
