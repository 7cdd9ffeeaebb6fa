"""The artifact store: a directory holding the build index, trained weight
archives, training logs, and packaged artifact records.

Index format (one record per line, tab-separated)::

    unit<TAB>arch_digest<TAB>config_digest<TAB>dataset_digest<TAB>row_count<TAB>archive_path<TAB>build_no

Index writes are atomic (write-temp-then-rename) and serialized through a
single lock so concurrent unit builds cannot interleave partial records.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, replace

INDEX_NAME = "index"
ARTIFACTS_NAME = "artifacts"


class CorruptStore(Exception):
    def __init__(self, path: str, detail: str):
        super().__init__(f"corrupt store file {path}: {detail}")
        self.path = path


@dataclass(frozen=True)
class StoreRecord:
    unit: str
    arch_digest: str
    config_digest: str
    dataset_digest: str
    row_count: int
    archive_path: str
    build_no: int

    def render(self) -> str:
        return "\t".join(
            [
                self.unit,
                self.arch_digest,
                self.config_digest,
                self.dataset_digest,
                str(self.row_count),
                self.archive_path,
                str(self.build_no),
            ]
        )


@dataclass(frozen=True)
class ArtifactRecord:
    kind: str  # source-archive | model-archive | dataset-archive
    digest: str
    path: str
    arch_digest: str = "-"
    config_digest: str = "-"
    dataset_digest: str = "-"
    row_count: int = 0
    link: str = "-"  # model <-> dataset association

    def render(self) -> str:
        return "\t".join(
            [
                self.kind,
                self.digest,
                self.path,
                self.arch_digest,
                self.config_digest,
                self.dataset_digest,
                str(self.row_count),
                self.link,
            ]
        )


class Store:
    def __init__(self, root: str):
        self.root = root
        self.index_path = os.path.join(root, INDEX_NAME)
        self.artifacts_path = os.path.join(root, ARTIFACTS_NAME)
        self._lock = threading.Lock()

    # -- directories ---------------------------------------------------

    def ensure(self) -> None:
        os.makedirs(self.root, exist_ok=True)
        os.makedirs(os.path.join(self.root, "weights"), exist_ok=True)
        os.makedirs(os.path.join(self.root, "logs"), exist_ok=True)

    def weights_path(self, unit: str, build_no: int) -> str:
        return os.path.join(self.root, "weights", f"{unit}-{build_no}.mlcw")

    def log_path(self, unit: str, build_no: int) -> str:
        return os.path.join(self.root, "logs", f"{unit}-{build_no}.log")

    # -- index ---------------------------------------------------------

    def read_index(self) -> list[StoreRecord]:
        if not os.path.isfile(self.index_path):
            return []
        records: list[StoreRecord] = []
        with open(self.index_path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 7:
                    raise CorruptStore(self.index_path, f"line {lineno} has {len(fields)} fields, expected 7")
                try:
                    records.append(
                        StoreRecord(
                            fields[0], fields[1], fields[2], fields[3],
                            int(fields[4]), fields[5], int(fields[6]),
                        )
                    )
                except ValueError as exc:
                    raise CorruptStore(self.index_path, f"line {lineno}: {exc}") from None
        return records

    def candidates(self, unit: str) -> list[StoreRecord]:
        """All records for a unit, newest build first."""
        records = [r for r in self.read_index() if r.unit == unit]
        return sorted(records, key=lambda r: (-r.build_no, r.archive_path))

    def next_build_no(self) -> int:
        records = self.read_index()
        return (max((r.build_no for r in records), default=0)) + 1

    def upsert(self, record: StoreRecord) -> None:
        """Replace the unit's record (atomic rewrite, serialized)."""
        with self._lock:
            records = [r for r in self.read_index() if r.unit != record.unit]
            records.append(record)
            records.sort(key=lambda r: r.unit)
            self._write_lines(self.index_path, [r.render() for r in records])

    def _write_lines(self, path: str, lines: list[str]) -> None:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            for line in lines:
                fh.write(line + "\n")
        os.replace(tmp, path)

    # -- artifact records ------------------------------------------------

    def read_artifacts(self) -> list[ArtifactRecord]:
        if not os.path.isfile(self.artifacts_path):
            return []
        records: list[ArtifactRecord] = []
        with open(self.artifacts_path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 8:
                    raise CorruptStore(self.artifacts_path, f"line {lineno} has {len(fields)} fields, expected 8")
                records.append(
                    ArtifactRecord(
                        fields[0], fields[1], fields[2], fields[3], fields[4],
                        fields[5], int(fields[6]), fields[7],
                    )
                )
        return records

    def add_artifact(self, record: ArtifactRecord) -> None:
        with self._lock:
            records = self.read_artifacts()
            records = [r for r in records if r.path != record.path]
            records.append(record)
            records.sort(key=lambda r: (r.kind, r.path))
            self._write_lines(self.artifacts_path, [r.render() for r in records])
