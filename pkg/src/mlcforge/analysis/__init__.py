"""Semantic validation: shape inference, statechart checks, pipeline wiring,
config validation against schemas, and the AutoML lint pass.

``analyze_unit`` runs every pass over an immutable ModelUnit and returns an
AnalysisResult carrying diagnostics ordered by (file, offset) plus derived
data (effective configs, preprocessing plans, shape annotations) that
downstream passes reuse.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from ..configs import ALGORITHM_SCHEMAS, validate_config
from ..diagnostics import Diagnostic, DiagnosticSink, Severity
from ..model import (
    ConfigTree,
    ModelError,
    ModelUnit,
    NetworkArch,
    PreprocessPlan,
    TrainableUnit,
    expand_def_blocks,
    resolve_generics,
)
from .automl import DatasetMeta, derive_plan, lint_automl, read_dataset_meta
from .shapes import ImportResolver, ShapeAnnotation, infer_shapes
from .statecharts import check_statechart
from .wiring import check_wiring

__all__ = [
    "AnalysisResult",
    "UnitInfo",
    "analyze_unit",
    "check_statechart",
    "check_wiring",
    "infer_shapes",
    "lint_automl",
    "ShapeAnnotation",
]


@dataclass
class UnitInfo:
    unit: TrainableUnit
    schema: str | None
    effective: ConfigTree
    plan: PreprocessPlan
    arch: NetworkArch | None = None  # resolved + flattened, network units only
    annotation: ShapeAnnotation | None = None
    meta: DatasetMeta | None = None


@dataclass
class AnalysisResult:
    unit: ModelUnit
    diagnostics: list[Diagnostic]
    units: dict[str, UnitInfo] = field(default_factory=dict)
    network_shapes: dict[str, ShapeAnnotation] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(d.severity is Severity.ERROR for d in self.diagnostics)


def instantiation_key(arch_name: str, bindings) -> str:
    binds = ",".join(f"{k}={v}" for k, v in sorted(dict(bindings).items()))
    return f"{arch_name}({binds})"


def _resolve_flat(
    arch: NetworkArch, bindings, sink: DiagnosticSink
) -> NetworkArch | None:
    try:
        return expand_def_blocks(resolve_generics(arch, dict(bindings)))
    except ModelError as exc:
        sink.error("net-elaboration", f"network '{arch.name}': {exc}", arch.pos)
        return None


def _unit_schema(tu: TrainableUnit, sink: DiagnosticSink) -> str | None:
    if tu.kind == "network":
        return "supervised"
    schema = ALGORITHM_SCHEMAS.get(tu.algorithm)
    if schema is None:
        sink.error(
            "ml-unknown-algorithm",
            f"unit '{tu.name}': unknown model_algorithm '{tu.algorithm}' "
            f"(supported: {', '.join(sorted(ALGORITHM_SCHEMAS))})",
            tu.pos,
        )
    return schema


def _check_dataset_columns(tu: TrainableUnit, meta: DatasetMeta | None, sink: DiagnosticSink) -> None:
    if meta is None:
        sink.error("ml-dataset-missing", f"unit '{tu.name}': dataset '{tu.dataset}' not found", tu.pos)
        return
    columns = set(meta.columns)
    for feature in tu.features:
        if feature not in columns:
            sink.error(
                "ml-missing-column",
                f"unit '{tu.name}': feature column '{feature}' not in dataset '{tu.dataset}'",
                tu.pos,
            )
    if tu.labels_mode in ("ON", "SEMI") and tu.label and tu.label not in columns:
        sink.error(
            "ml-missing-column",
            f"unit '{tu.name}': label column '{tu.label}' not in dataset '{tu.dataset}'",
            tu.pos,
        )


def _collect_instantiations(unit: ModelUnit) -> dict[str, tuple[NetworkArch, tuple]]:
    """Every concrete (arch, bindings) pair used by pipelines or train units."""
    wanted: dict[str, tuple[NetworkArch, tuple]] = {}
    for arch in unit.networks:
        if not arch.generics:
            wanted[instantiation_key(arch.name, ())] = (arch, ())
    for pipe in unit.pipelines:
        for inst in pipe.instances:
            if inst.kind != "network":
                continue
            arch = unit.network(inst.type_name or "")
            if arch is not None:
                wanted[instantiation_key(arch.name, inst.bindings)] = (arch, inst.bindings)
    for tu in unit.train_units:
        if tu.kind != "network" or tu.arch_name is None:
            continue
        arch = unit.network(tu.arch_name)
        if arch is not None:
            wanted[instantiation_key(arch.name, tu.bindings)] = (arch, tu.bindings)
    return wanted


def analyze_unit(
    unit: ModelUnit,
    import_resolver: ImportResolver | None = None,
    automl: bool | None = None,
) -> AnalysisResult:
    """Run all semantic passes; ``automl`` overrides the manifest flag."""
    sink = DiagnosticSink()
    automl_mode = unit.manifest.automl_mode if automl is None else automl

    for config in unit.configs:
        diags, _ = validate_config(config.tree, config.schema)
        sink.extend(diags)

    for thing in unit.things:
        sink.extend(check_statechart(thing))

    network_shapes: dict[str, ShapeAnnotation] = {}
    flat_archs: dict[str, NetworkArch] = {}
    for key, (arch, bindings) in sorted(_collect_instantiations(unit).items()):
        flat = _resolve_flat(arch, bindings, sink)
        if flat is None:
            continue
        flat_archs[key] = flat
        annotation, diags = infer_shapes(flat, import_resolver)
        sink.extend(diags)
        if annotation is not None:
            network_shapes[key] = annotation

    for pipe in unit.pipelines:
        sink.extend(check_wiring(pipe, unit))

    units: dict[str, UnitInfo] = {}
    for tu in unit.train_units:
        schema = _unit_schema(tu, sink)
        if schema is None:
            continue
        diags, effective = validate_config(tu.raw_config, schema)
        sink.extend(diags)
        if bool(effective.get("standardize")) and bool(effective.get("normalize")):
            sink.error(
                "ml-plan",
                f"unit '{tu.name}': standardize and normalize are mutually exclusive",
                tu.pos,
            )
            effective = effective.with_entry("normalize", False)
        meta = read_dataset_meta(os.path.join(unit.manifest.root, tu.dataset))
        _check_dataset_columns(tu, meta, sink)
        info = UnitInfo(tu, schema, effective, derive_plan(tu, effective), meta=meta)
        if tu.kind == "network" and tu.arch_name is not None:
            key = instantiation_key(tu.arch_name, tu.bindings)
            info.arch = flat_archs.get(key)
            info.annotation = network_shapes.get(key)
        units[tu.name] = info

    if automl_mode:
        effective_map = {name: info.effective for name, info in units.items()}
        lint_diags, rewritten = lint_automl(unit, True, effective_map)
        sink.extend(lint_diags)
        if rewritten is not unit:
            unit = rewritten
            for tu in unit.train_units:
                info = units.get(tu.name)
                if info is None or info.schema is None:
                    continue
                diags, effective = validate_config(tu.raw_config, info.schema)
                sink.extend(diags)
                info.unit = tu
                info.effective = effective
                info.plan = derive_plan(tu, effective)
    else:
        effective_map = {name: info.effective for name, info in units.items()}
        lint_diags, _ = lint_automl(unit, False, effective_map)
        sink.extend(lint_diags)

    return AnalysisResult(unit, sink.sorted(), units, network_shapes)
