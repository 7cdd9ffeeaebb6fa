"""Change-driven build planning: skip, cold-train, or warm-retrain per unit.

Decision table:

    nothing changed                         -> Skip
    no prior record / prior archive gone    -> ColdTrain
    arch or backend digest changed          -> ColdTrain (arch-changed)
    effective config digest changed         -> ColdTrain (config-changed)
    dataset purely appended                 -> WarmRetrain (prior archive)
    dataset changed any other way           -> ColdTrain (dataset-changed)
    --retrain flag                          -> ColdTrain (forced)

The plan is a pure function of digests and the store index, ordered
topologically over pretrained-import dependencies between units.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from ..analysis import AnalysisResult, UnitInfo
from ..diagnostics import Diagnostic, DiagnosticSink
from ..model import LayerSpec
from . import digests
from .store import Store, StoreRecord

#: ImportPretrained archive refs of this form depend on a sibling unit
UNIT_REF_PREFIX = "unit:"


class PlanError(Exception):
    pass


@dataclass(frozen=True)
class Decision:
    kind: str  # skip | cold-train | warm-retrain
    reason: str = ""
    prior: StoreRecord | None = None

    @property
    def trains(self) -> bool:
        return self.kind != "skip"


@dataclass(frozen=True)
class UnitPlan:
    unit: str
    decision: Decision
    arch_digest: str
    config_digest: str
    dataset_digest: str
    row_count: int
    deps: tuple[str, ...] = ()


@dataclass(frozen=True)
class BuildPlan:
    entries: tuple[UnitPlan, ...]  # topological order
    infos: tuple[Diagnostic, ...] = ()

    def entry(self, unit: str) -> UnitPlan | None:
        for e in self.entries:
            if e.unit == unit:
                return e
        return None

    @property
    def all_skip(self) -> bool:
        return all(e.decision.kind == "skip" for e in self.entries)


def _unit_deps(info: UnitInfo, known_units: set[str]) -> tuple[str, ...]:
    if info.arch is None:
        return ()
    deps = []
    for layer in info.arch.body:
        if isinstance(layer, LayerSpec) and layer.kind == "ImportPretrained":
            ref = str(layer.arg("archive"))
            if ref.startswith(UNIT_REF_PREFIX):
                target = ref[len(UNIT_REF_PREFIX):]
                if target in known_units:
                    deps.append(target)
    return tuple(sorted(set(deps)))


def _toposort(names: list[str], deps: dict[str, tuple[str, ...]]) -> list[str]:
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(name: str, chain: tuple[str, ...]) -> None:
        mark = state.get(name, 0)
        if mark == 2:
            return
        if mark == 1:
            raise PlanError("pretrained-import cycle: " + " -> ".join(chain + (name,)))
        state[name] = 1
        for dep in deps.get(name, ()):
            visit(dep, chain + (name,))
        state[name] = 2
        order.append(name)

    for name in sorted(names):
        visit(name, ())
    return order


def _decide(
    info: UnitInfo,
    store: Store,
    arch_d: str,
    config_d: str,
    dataset_d: str,
    dataset_path: str,
    force: bool,
    sink: DiagnosticSink,
) -> Decision:
    if force:
        return Decision("cold-train", "forced")
    candidates = store.candidates(info.unit.name)
    if not candidates:
        return Decision("cold-train", "no-prior")
    if len(candidates) > 1:
        sink.info(
            "plan-ambiguous-prior",
            f"unit '{info.unit.name}' has {len(candidates)} stored records; "
            f"using build {candidates[0].build_no}",
            info.unit.pos,
        )
    prior = candidates[0]
    if prior.arch_digest != arch_d:
        return Decision("cold-train", "arch-changed")
    if prior.config_digest != config_d:
        return Decision("cold-train", "config-changed")
    archive_abs = prior.archive_path
    if not os.path.isabs(archive_abs):
        archive_abs = os.path.join(os.path.dirname(store.root), prior.archive_path)
    if prior.dataset_digest == dataset_d:
        if not os.path.isfile(archive_abs):
            return Decision("cold-train", "prior-archive-missing")
        return Decision("skip", "up-to-date", prior)
    if digests.is_pure_append(dataset_path, prior.dataset_digest, prior.row_count):
        if not os.path.isfile(archive_abs):
            return Decision("cold-train", "prior-archive-missing")
        return Decision("warm-retrain", "dataset-appended", prior)
    return Decision("cold-train", "dataset-changed")


def plan(analysis: AnalysisResult, store: Store, force: bool = False) -> BuildPlan:
    """Derive the per-unit build plan from digests and the store index."""
    sink = DiagnosticSink()
    root = analysis.unit.manifest.root
    known = set(analysis.units)
    deps = {name: _unit_deps(info, known) for name, info in analysis.units.items()}
    order = _toposort(sorted(analysis.units), deps)

    entries: list[UnitPlan] = []
    for name in order:
        info = analysis.units[name]
        dataset_path = os.path.join(root, info.unit.dataset)
        if not os.path.isfile(dataset_path):
            raise PlanError(f"unit '{name}': dataset '{info.unit.dataset}' missing (analysis should have caught this)")
        arch_d = digests.arch_digest(info)
        config_d = digests.config_digest(info)
        dataset_d = digests.dataset_digest(dataset_path)
        rows = digests.count_rows(dataset_path)
        decision = _decide(info, store, arch_d, config_d, dataset_d, dataset_path, force, sink)
        entries.append(UnitPlan(name, decision, arch_d, config_d, dataset_d, rows, deps[name]))
    return BuildPlan(tuple(entries), tuple(sink.items))
