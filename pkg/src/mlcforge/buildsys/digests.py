"""Content digests feeding the staleness planner.

Sources are digested over canonicalized bytes (pretty-printed declarations,
LF line endings); datasets over raw file bytes. Append detection re-digests
the byte prefix covering the recorded row count: equality with the stored
dataset digest means rows were purely appended.
"""

from __future__ import annotations

import hashlib
import os

from ..analysis import UnitInfo
from ..frontend.printer import print_config_tree, print_network


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_text(text: str) -> str:
    return digest_bytes(text.replace("\r\n", "\n").replace("\r", "\n").encode("utf-8"))


def digest_file(path: str) -> str:
    with open(path, "rb") as fh:
        return digest_bytes(fh.read())


def arch_digest(info: UnitInfo) -> str:
    """Digest of the unit's model structure (plus backend id).

    Networks digest their resolved, flattened architecture; ML-block units
    digest the structural half of the block (algorithm, features, labels).
    Hyperparameters belong to the config digest instead.
    """
    unit = info.unit
    if unit.kind == "network" and info.arch is not None:
        canonical = print_network(info.arch)
    else:
        label = unit.label or ""
        canonical = (
            f"algorithm: {unit.algorithm}\n"
            f"features: {','.join(unit.features)}\n"
            f"labels: {unit.labels_mode} {label}"
        )
    return digest_text(canonical + f"\nbackend: {unit.backend}\n")


def config_digest(info: UnitInfo) -> str:
    return digest_text(print_config_tree(info.effective) + "\n")


def dataset_digest(path: str) -> str:
    return digest_file(path)


def count_rows(path: str) -> int:
    """Data rows in a CSV (header excluded, trailing blank lines ignored)."""
    count = 0
    with open(path, "rb") as fh:
        first = True
        for line in fh:
            if first:
                first = False
                continue
            if line.strip():
                count += 1
    return count


def prefix_digest(path: str, rows: int) -> str | None:
    """Digest of the bytes spanning the header plus the first ``rows`` data
    rows (including the terminating newline); None if the file is shorter."""
    needed = rows + 1
    offset = 0
    with open(path, "rb") as fh:
        data = fh.read()
    for _ in range(needed):
        nl = data.find(b"\n", offset)
        if nl < 0:
            return None
        offset = nl + 1
    return digest_bytes(data[:offset])


def is_pure_append(path: str, recorded_digest: str, recorded_rows: int) -> bool:
    """True when ``path`` equals the recorded dataset plus appended rows."""
    if count_rows(path) <= recorded_rows:
        return False
    prefix = prefix_digest(path, recorded_rows)
    return prefix is not None and prefix == recorded_digest
