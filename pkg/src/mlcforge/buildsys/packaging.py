"""Deterministic artifact archives: source, model, and dataset packages.

Archives are plain uncompressed tars with sorted entries, zeroed timestamps
and ownership, and an embedded MANIFEST (canonical key-value text), so
packaging identical inputs yields identical bytes on any host. Every package
is recorded in the store's artifact index; model archives record the dataset
digest they were trained with.
"""

from __future__ import annotations

import io
import os
import tarfile

from ..frontend.printer import print_config_tree
from ..model import ConfigTree, ModelUnit
from .. import weights as weights_mod
from . import digests
from .store import ArtifactRecord, Store, StoreRecord


class MissingInput(Exception):
    def __init__(self, path: str):
        super().__init__(f"packaging input missing: {path}")
        self.path = path


def _tar_bytes(entries: list[tuple[str, bytes]]) -> bytes:
    buffer = io.BytesIO()
    with tarfile.open(fileobj=buffer, mode="w", format=tarfile.USTAR_FORMAT) as tar:
        for name, data in sorted(entries, key=lambda e: e[0]):
            info = tarfile.TarInfo(name)
            info.size = len(data)
            info.mtime = 0
            info.uid = 0
            info.gid = 0
            info.uname = ""
            info.gname = ""
            info.mode = 0o644
            tar.addfile(info, io.BytesIO(data))
    return buffer.getvalue()


def _read_input(root: str, rel: str) -> bytes:
    path = os.path.join(root, rel)
    if not os.path.isfile(path):
        raise MissingInput(rel)
    with open(path, "rb") as fh:
        return fh.read()


def _write(out_path: str, data: bytes) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    with open(out_path, "wb") as fh:
        fh.write(data)


def package_source(unit: ModelUnit, store: Store, out_path: str) -> ArtifactRecord:
    """Bundle every model source file plus the project manifest."""
    root = unit.manifest.root
    entries = [("mlc.project", _read_input(root, "mlc.project"))]
    for rel in sorted(unit.files):
        entries.append((rel, _read_input(root, rel)))
    manifest = ConfigTree(
        (
            ("kind", "source-archive"),
            ("project", unit.manifest.project),
            ("files", tuple(sorted(unit.files))),
        )
    )
    entries.append(("MANIFEST", (print_config_tree(manifest) + "\n").encode("utf-8")))
    data = _tar_bytes(entries)
    _write(out_path, data)
    record = ArtifactRecord("source-archive", digests.digest_bytes(data), out_path)
    store.add_artifact(record)
    return record


def package_dataset(unit: ModelUnit, store: Store, dataset_rel: str, out_path: str, link: str = "-") -> ArtifactRecord:
    """Bundle one dataset CSV with its row count and model association."""
    root = unit.manifest.root
    data_bytes = _read_input(root, dataset_rel)
    dataset_d = digests.digest_bytes(data_bytes)
    rows = digests.count_rows(os.path.join(root, dataset_rel))
    manifest = ConfigTree(
        (
            ("kind", "dataset-archive"),
            ("dataset", dataset_rel),
            ("dataset_digest", dataset_d),
            ("row_count", rows),
            ("link", link),
        )
    )
    entries = [
        (os.path.basename(dataset_rel), data_bytes),
        ("MANIFEST", (print_config_tree(manifest) + "\n").encode("utf-8")),
    ]
    data = _tar_bytes(entries)
    _write(out_path, data)
    record = ArtifactRecord(
        "dataset-archive", digests.digest_bytes(data), out_path,
        dataset_digest=dataset_d, row_count=rows, link=link,
    )
    store.add_artifact(record)
    return record


def package_model(unit: ModelUnit, store: Store, record: StoreRecord, out_path: str) -> ArtifactRecord:
    """Bundle a trained unit's weight archive (with optimizer state) plus its
    provenance manifest referencing the dataset it was trained with."""
    root = unit.manifest.root
    weights_bytes = _read_input(root, record.archive_path)
    # verify the archive is sound before shipping it
    weights_mod.read_archive_bytes(weights_bytes)
    manifest = ConfigTree(
        (
            ("kind", "model-archive"),
            ("unit", record.unit),
            ("arch_digest", record.arch_digest),
            ("config_digest", record.config_digest),
            ("dataset_digest", record.dataset_digest),
            ("row_count", record.row_count),
            ("build_no", record.build_no),
        )
    )
    entries = [
        ("weights.mlcw", weights_bytes),
        ("MANIFEST", (print_config_tree(manifest) + "\n").encode("utf-8")),
    ]
    data = _tar_bytes(entries)
    _write(out_path, data)
    artifact = ArtifactRecord(
        "model-archive", digests.digest_bytes(data), out_path,
        arch_digest=record.arch_digest, config_digest=record.config_digest,
        dataset_digest=record.dataset_digest, row_count=record.row_count,
        link=record.dataset_digest,
    )
    store.add_artifact(artifact)
    return artifact
