"""Build execution: drives training over the bridge in dependency order.

Each non-skip unit gets a fresh bridge process (the server handles one
request at a time); up to ``jobs`` independent units run concurrently.
Failures abort dependent units but leave independent ones running. Store
index updates happen only after a unit trains successfully.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field

from ..analysis import AnalysisResult
from ..bridge import BridgeClient, BridgeError
from ..codegen import get_backend, model_spec_for, training_plan_tree
from ..model import ConfigTree
from .planner import BuildPlan, UnitPlan
from .store import Store, StoreRecord


class TrainingFailed(Exception):
    def __init__(self, unit: str, detail: str):
        super().__init__(f"training failed for unit '{unit}': {detail}")
        self.unit = unit
        self.detail = detail


@dataclass
class UnitResult:
    unit: str
    decision: str
    reason: str
    status: str  # ok | skipped | failed | aborted
    wall_ms: int = 0
    metric: float | None = None
    epochs: int | None = None
    archive: str = ""
    log: str = ""
    error: str = ""


@dataclass
class BuildReport:
    project: str
    results: list[UnitResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.status in ("ok", "skipped") for r in self.results)

    @property
    def trained(self) -> list[UnitResult]:
        return [r for r in self.results if r.status == "ok" and r.decision != "skip"]

    def result(self, unit: str) -> UnitResult | None:
        for r in self.results:
            if r.unit == unit:
                return r
        return None

    def to_tree(self) -> ConfigTree:
        unit_entries = []
        for r in sorted(self.results, key=lambda x: x.unit):
            fields: list[tuple[str, object]] = [
                ("decision", r.decision),
                ("reason", r.reason),
                ("status", r.status),
                ("wall_ms", r.wall_ms),
            ]
            if r.metric is not None:
                fields.append(("final_metric", round(r.metric, 6)))
            if r.epochs is not None:
                fields.append(("epochs", r.epochs))
            if r.archive:
                fields.append(("archive", r.archive))
            if r.log:
                fields.append(("log", r.log))
            if r.error:
                fields.append(("error", r.error))
            unit_entries.append((r.unit, ConfigTree(tuple(fields))))
        return ConfigTree(
            (
                ("kind", "build"),
                ("project", self.project),
                ("units", ConfigTree(tuple(unit_entries))),
            )
        )


def train_payload(analysis: AnalysisResult, entry: UnitPlan, store: Store, build_no: int) -> tuple[ConfigTree, str, str]:
    """Assemble the TRAIN verb payload plus the archive/log paths it writes."""
    info = analysis.units[entry.unit]
    backend = get_backend(info.unit.backend)
    spec = model_spec_for(info, backend)
    tree = training_plan_tree(info, spec, backend)
    root = analysis.unit.manifest.root
    archive_rel = os.path.relpath(store.weights_path(entry.unit, build_no), root)
    log_rel = info.unit.training_results or os.path.relpath(store.log_path(entry.unit, build_no), root)
    out = ConfigTree((("archive", archive_rel), ("log", log_rel), ("dataset_digest", entry.dataset_digest)))
    tree = tree.with_entry("out", out)
    if entry.decision.kind == "warm-retrain" and entry.decision.prior is not None:
        tree = tree.with_entry("warm", entry.decision.prior.archive_path)
    return tree, archive_rel, log_rel


def _run_unit(
    analysis: AnalysisResult,
    entry: UnitPlan,
    store: Store,
    launcher,
    timeout: float | None,
    build_no: int,
) -> UnitResult:
    decision = entry.decision
    result = UnitResult(entry.unit, decision.kind, decision.reason, "ok")
    if decision.kind == "skip":
        result.status = "skipped"
        if decision.prior is not None:
            result.archive = decision.prior.archive_path
        return result

    payload, archive_rel, log_rel = train_payload(analysis, entry, store, build_no)
    started = time.monotonic()
    client: BridgeClient = launcher()
    try:
        response = client.call("TRAIN", payload, timeout=timeout)
    except BridgeError as exc:
        result.status = "failed"
        result.error = str(exc)
        result.wall_ms = int((time.monotonic() - started) * 1000)
        return result
    finally:
        client.close()
    result.wall_ms = int((time.monotonic() - started) * 1000)

    metric = response.get("final_metric", response.get("final_acc"))
    result.metric = float(metric) if metric is not None else None
    epochs = response.get("epochs")
    result.epochs = int(epochs) if epochs is not None else None
    result.archive = archive_rel
    result.log = log_rel

    root = analysis.unit.manifest.root
    if not os.path.isfile(os.path.join(root, archive_rel)):
        result.status = "failed"
        result.error = f"bridge reported success but wrote no archive at {archive_rel}"
        return result
    store.upsert(
        StoreRecord(
            unit=entry.unit,
            arch_digest=entry.arch_digest,
            config_digest=entry.config_digest,
            dataset_digest=entry.dataset_digest,
            row_count=entry.row_count,
            archive_path=archive_rel,
            build_no=build_no,
        )
    )
    return result


def execute(
    analysis: AnalysisResult,
    plan: BuildPlan,
    store: Store,
    launcher,
    jobs: int = 1,
    timeout: float | None = None,
) -> BuildReport:
    """Run the plan; returns the per-unit build report in plan order."""
    store.ensure()
    report = BuildReport(analysis.unit.manifest.project)
    status: dict[str, str] = {}
    results: dict[str, UnitResult] = {}
    pending = {e.unit: e for e in plan.entries}
    # build numbers assigned up front in plan order, so runs are reproducible
    base_no = store.next_build_no()
    build_nos = {}
    for entry in plan.entries:
        if entry.decision.trains:
            build_nos[entry.unit] = base_no
            base_no += 1

    def ready(entry: UnitPlan) -> bool:
        return all(status.get(dep) in ("ok", "skipped") for dep in entry.deps)

    def blocked(entry: UnitPlan) -> bool:
        return any(status.get(dep) in ("failed", "aborted") for dep in entry.deps)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = {}
        while pending or futures:
            progressed = False
            for unit in [u for u in pending if u not in futures]:
                entry = pending[unit]
                if blocked(entry):
                    result = UnitResult(
                        unit, entry.decision.kind, entry.decision.reason,
                        "aborted", error="dependency failed",
                    )
                    status[unit] = "aborted"
                    results[unit] = result
                    del pending[unit]
                    progressed = True
                elif ready(entry):
                    futures[unit] = pool.submit(
                        _run_unit, analysis, entry, store, launcher, timeout,
                        build_nos.get(unit, 0),
                    )
                    del pending[unit]
                    progressed = True
            if not futures:
                if pending and not progressed:
                    # only unreachable dependencies remain
                    for unit, entry in list(pending.items()):
                        results[unit] = UnitResult(
                            unit, entry.decision.kind, entry.decision.reason,
                            "aborted", error="unresolved dependency",
                        )
                        status[unit] = "aborted"
                        del pending[unit]
                continue
            done, _ = wait(futures.values(), return_when=FIRST_COMPLETED)
            for unit, future in list(futures.items()):
                if future in done:
                    result = future.result()
                    results[unit] = result
                    status[unit] = result.status
                    del futures[unit]

    for entry in plan.entries:
        report.results.append(results[entry.unit])
    return report
