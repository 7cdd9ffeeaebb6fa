"""Project loading: manifest, file globbing, cross-file name resolution.

Files are parsed in lexicographic path order so diagnostics and downstream
artifacts are byte-identical across runs on identical directory contents.
"""

from __future__ import annotations

import glob as globmod
import os

from ..diagnostics import Diagnostic, DiagnosticSink, SourcePos
from ..model import (
    ConfigTree,
    ModelUnit,
    NamedConfig,
    NetworkArch,
    PipelineGraph,
    ProjectManifest,
    ThingDef,
    TrainableUnit,
)
from .conflang import parse_config
from .manifest import MANIFEST_NAME, parse_manifest
from .netlang import parse_network
from .syslang import parse_system


def _read_text(path: str) -> str:
    with open(path, "rb") as fh:
        data = fh.read()
    return data.decode("utf-8", errors="replace")


def _glob_files(root: str, pattern: str) -> list[str]:
    matches = globmod.glob(os.path.join(root, pattern), recursive=True)
    return sorted(os.path.relpath(m, root) for m in matches if os.path.isfile(m))


def _csv_header(path: str) -> list[str]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            line = fh.readline().strip()
    except OSError:
        return []
    if not line:
        return []
    return [col.strip().strip('"') for col in line.split(",")]


def _dataset_features(root: str, dataset: str, label: str | None) -> tuple[str, ...]:
    header = _csv_header(os.path.join(root, dataset))
    return tuple(c for c in header if c != label)


def _manifest_train_units(
    manifest: ProjectManifest,
    networks: dict[str, NetworkArch],
    configs: dict[str, NamedConfig],
    sink: DiagnosticSink,
) -> list[TrainableUnit]:
    units: list[TrainableUnit] = []
    for unit_name, entry in manifest.train_entries.entries:
        if not isinstance(entry, ConfigTree):
            sink.error("manifest-key", f"train.{unit_name} entries must be dotted fields", manifest.pos)
            continue
        arch_name = entry.get("arch")
        if arch_name is None:
            # bare flag group (e.g. sequential) for a thing-backed unit
            continue
        arch_name = str(arch_name)
        if arch_name not in networks:
            sink.error(
                "manifest-ref",
                f"train.{unit_name}.arch references unknown network '{arch_name}'",
                manifest.pos,
            )
            continue
        config_name = entry.get("config")
        if config_name is not None and str(config_name) not in configs:
            sink.error(
                "manifest-ref",
                f"train.{unit_name}.config references unknown config '{config_name}'",
                manifest.pos,
            )
            continue
        dataset = entry.get("dataset")
        if dataset is None:
            sink.error("manifest-key", f"train.{unit_name} needs a dataset", manifest.pos)
            continue
        bindings: list[tuple[str, int]] = []
        bind = entry.get("bind")
        if isinstance(bind, ConfigTree):
            for generic, value in bind.entries:
                if not isinstance(value, int):
                    sink.error(
                        "manifest-value",
                        f"train.{unit_name}.bind.{generic} must be an integer",
                        manifest.pos,
                    )
                    continue
                bindings.append((generic, value))
        label = entry.get("label")
        raw_config = configs[str(config_name)].tree if config_name is not None else ConfigTree()
        units.append(
            TrainableUnit(
                name=unit_name,
                kind="network",
                arch_name=arch_name,
                bindings=tuple(bindings),
                config_name=str(config_name) if config_name is not None else None,
                dataset=str(dataset),
                label=str(label) if label is not None else "label",
                features=_dataset_features(manifest.root, str(dataset), str(label) if label else "label"),
                labels_mode="ON",
                algorithm="mlp",
                backend=manifest.backend,
                sequential=bool(entry.get("sequential", False)),
                training_results=None,
                prediction_results=None,
                raw_config=raw_config,
                pos=manifest.pos,
            )
        )
    return units


def _thing_train_units(
    manifest: ProjectManifest, things: dict[str, ThingDef], sink: DiagnosticSink
) -> list[TrainableUnit]:
    units: list[TrainableUnit] = []
    for name in sorted(things):
        thing = things[name]
        block = thing.ml_block
        if block is None:
            continue
        flags = manifest.train_entries.get(name)
        sequential = False
        if isinstance(flags, ConfigTree):
            sequential = bool(flags.get("sequential", False))
        features = block.features
        if not features:
            features = _dataset_features(manifest.root, block.dataset_path, block.label_name)
        units.append(
            TrainableUnit(
                name=name,
                kind="thing",
                arch_name=None,
                bindings=(),
                config_name=None,
                dataset=block.dataset_path,
                label=block.label_name,
                features=features,
                labels_mode=block.labels_mode,
                algorithm=block.algorithm,
                backend=block.backend if block.backend else manifest.backend,
                sequential=sequential,
                training_results=block.training_results,
                prediction_results=block.prediction_results,
                raw_config=block.hyperparams,
                pos=block.pos,
            )
        )
    return units


def load_project(directory: str) -> tuple[ModelUnit | None, list[Diagnostic]]:
    """Load and parse every project file under ``directory``.

    Returns the merged ModelUnit plus diagnostics sorted by (file, offset).
    The unit is None only when the manifest itself is missing or unusable;
    otherwise callers decide validity from error-severity diagnostics.
    """
    sink = DiagnosticSink()
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.isfile(manifest_path):
        sink.error(
            "missing-manifest",
            f"no '{MANIFEST_NAME}' manifest in {directory}",
            SourcePos(MANIFEST_NAME),
        )
        return None, sink.sorted()
    manifest, diags = parse_manifest(_read_text(manifest_path), MANIFEST_NAME, root=directory)
    sink.extend(diags)
    if manifest is None:
        return None, sink.sorted()

    networks: dict[str, NetworkArch] = {}
    configs: dict[str, NamedConfig] = {}
    things: dict[str, ThingDef] = {}
    pipelines: dict[str, PipelineGraph] = {}
    decl_pos: dict[tuple[str, str], SourcePos] = {}
    files: list[str] = []

    def declare(namespace: str, name: str, pos: SourcePos) -> bool:
        key = (namespace, name)
        if key in decl_pos:
            sink.error(
                "duplicate-name",
                f"duplicate {namespace} '{name}' (also declared at {decl_pos[key]})",
                pos,
                related=(decl_pos[key],),
            )
            return False
        decl_pos[key] = pos
        return True

    glob_map = dict(manifest.globs)
    for rel in _glob_files(directory, glob_map.get("networks", "*.nal")):
        files.append(rel)
        archs, diags = parse_network(_read_text(os.path.join(directory, rel)), rel)
        sink.extend(diags)
        for arch in archs:
            if declare("network", arch.name, arch.pos):
                networks[arch.name] = arch
    for rel in _glob_files(directory, glob_map.get("configs", "*.tcl")):
        files.append(rel)
        tree, diags = parse_config(_read_text(os.path.join(directory, rel)), rel)
        sink.extend(diags)
        if tree is not None:
            name = os.path.splitext(os.path.basename(rel))[0]
            if declare("config", name, tree.pos):
                configs[name] = NamedConfig(name, "supervised", tree, tree.pos)
    for rel in _glob_files(directory, glob_map.get("systems", "*.scl")):
        files.append(rel)
        file_things, file_pipelines, diags = parse_system(_read_text(os.path.join(directory, rel)), rel)
        sink.extend(diags)
        for thing in file_things:
            if declare("thing", thing.name, thing.pos):
                things[thing.name] = thing
        for pipe in file_pipelines:
            if declare("pipeline", pipe.name, pipe.pos):
                pipelines[pipe.name] = pipe

    train_units = _manifest_train_units(manifest, networks, configs, sink)
    train_units += _thing_train_units(manifest, things, sink)
    train_names: dict[str, TrainableUnit] = {}
    for unit in train_units:
        if unit.name in train_names:
            sink.error(
                "duplicate-name",
                f"trainable unit '{unit.name}' declared more than once",
                unit.pos,
            )
            continue
        train_names[unit.name] = unit

    unit = ModelUnit(
        manifest=manifest,
        networks=tuple(networks[k] for k in sorted(networks)),
        configs=tuple(configs[k] for k in sorted(configs)),
        things=tuple(things[k] for k in sorted(things)),
        pipelines=tuple(pipelines[k] for k in sorted(pipelines)),
        train_units=tuple(train_names[k] for k in sorted(train_names)),
        files=tuple(files),
    )
    return unit, sink.sorted()
