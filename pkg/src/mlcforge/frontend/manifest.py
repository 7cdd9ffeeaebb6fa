"""Parser for the flat `mlc.project` manifest (``key = value`` lines).

Dotted keys build nested entries; ``train.<unit>.*`` keys declare trainable
network units, e.g.::

    project = mnist_calculator
    backend = reference
    automl = off
    store = .mlc-store
    networks = networks/*.nal
    train.digits.arch = DigitDetector
    train.digits.bind.classes = 10
"""

from __future__ import annotations

import os

from ..diagnostics import Diagnostic, DiagnosticSink, SourcePos
from ..model import ConfigTree, ConfigValue, ProjectManifest

MANIFEST_NAME = "mlc.project"

_KNOWN_KEYS = {"project", "backend", "automl", "store", "networks", "configs", "systems", "bridge"}


def _parse_value(raw: str) -> ConfigValue:
    if raw in ("true", "on", "yes"):
        return True
    if raw in ("false", "off", "no"):
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def _insert(tree: dict, parts: list[str], value: ConfigValue) -> bool:
    node = tree
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            return False
    if parts[-1] in node:
        return False
    node[parts[-1]] = value
    return True


def _to_config_tree(node: dict) -> ConfigTree:
    entries = []
    for key, value in node.items():
        if isinstance(value, dict):
            entries.append((key, _to_config_tree(value)))
        else:
            entries.append((key, value))
    return ConfigTree(tuple(entries))


def parse_manifest(text: str, file: str, root: str | None = None) -> tuple[ProjectManifest | None, list[Diagnostic]]:
    """Parse a manifest file; returns None plus diagnostics on fatal problems."""
    sink = DiagnosticSink()
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    values: dict[str, tuple[str, SourcePos]] = {}
    train: dict = {}
    offset = 0
    for lineno, line in enumerate(text.split("\n"), start=1):
        pos = SourcePos(file, lineno, 1, offset)
        offset += len(line) + 1
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            sink.error("manifest-syntax", f"expected 'key = value', got '{stripped}'", pos)
            continue
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if not key:
            sink.error("manifest-syntax", "missing key before '='", pos)
            continue
        if key.startswith("train."):
            parts = key.split(".")[1:]
            if len(parts) < 2:
                sink.error("manifest-key", f"train entry '{key}' needs a unit and a field", pos)
                continue
            if not _insert(train, parts, _parse_value(raw)):
                sink.error("manifest-duplicate", f"duplicate manifest key '{key}'", pos)
            continue
        if key in values:
            sink.error(
                "manifest-duplicate",
                f"duplicate manifest key '{key}'",
                pos,
                related=(values[key][1],),
            )
            continue
        if key not in _KNOWN_KEYS:
            sink.error("manifest-key", f"unknown manifest key '{key}'", pos)
            continue
        values[key] = (raw, pos)

    def get(key: str, default: str = "") -> str:
        return values.get(key, (default, None))[0]

    if "project" not in values:
        sink.error("manifest-key", "manifest must set 'project'", SourcePos(file))
        return None, sink.sorted()

    automl_raw = get("automl", "off")
    automl = _parse_value(automl_raw)
    if not isinstance(automl, bool):
        sink.error("manifest-value", f"automl must be on/off, got '{automl_raw}'", values["automl"][1])
        automl = False

    globs = (
        ("networks", get("networks", "*.nal")),
        ("configs", get("configs", "*.tcl")),
        ("systems", get("systems", "*.scl")),
    )
    manifest = ProjectManifest(
        project=get("project"),
        root=root or os.path.dirname(os.path.abspath(file)),
        backend=get("backend", "reference"),
        automl_mode=bool(automl),
        store=get("store", ".mlc-store"),
        globs=globs,
        bridge=get("bridge") or None,
        train_entries=_to_config_tree(train),
        pos=SourcePos(file),
    )
    return manifest, sink.sorted()
