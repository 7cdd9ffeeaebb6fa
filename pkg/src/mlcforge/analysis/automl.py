"""Rule-based AutoML lints (R1-R5) with optional auto-fixes.

Rules inspect each trainable unit's effective config plus lightweight dataset
metadata. When automl mode is on, fixable findings rewrite the unit's raw
config (shuffle off for sequential data, standardization for unscaled ANN
features) and every applied fix is reported as an info diagnostic. The rule
set is a registry so downstream projects can append their own rules.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from typing import Callable

from ..diagnostics import Diagnostic, DiagnosticSink, Severity, SourcePos
from ..model import (
    ConfigTree,
    ModelUnit,
    PlanStep,
    PreprocessPlan,
    TrainableUnit,
)

#: observed |value| above this marks a numeric feature column as unscaled
UNSCALED_MAGNITUDE = 3.5

_META_SAMPLE_ROWS = 512


@dataclass(frozen=True)
class DatasetMeta:
    columns: tuple[str, ...]
    numeric: tuple[str, ...]
    col_min: dict
    col_max: dict
    row_count: int


def read_dataset_meta(path: str, sample_rows: int = _META_SAMPLE_ROWS) -> DatasetMeta | None:
    """Scan a CSV for column kinds and numeric ranges (bounded sample)."""
    if not os.path.isfile(path):
        return None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline().strip()
        if not header:
            return None
        columns = tuple(c.strip().strip('"') for c in header.split(","))
        numeric = {c: True for c in columns}
        col_min: dict = {}
        col_max: dict = {}
        row_count = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row_count += 1
            if row_count > sample_rows:
                continue
            cells = line.split(",")
            for col, cell in zip(columns, cells):
                try:
                    value = float(cell)
                except ValueError:
                    numeric[col] = False
                    continue
                if col not in col_min or value < col_min[col]:
                    col_min[col] = value
                if col not in col_max or value > col_max[col]:
                    col_max[col] = value
    return DatasetMeta(
        columns=columns,
        numeric=tuple(c for c in columns if numeric[c]),
        col_min=col_min,
        col_max=col_max,
        row_count=row_count,
    )


@dataclass(frozen=True)
class LintContext:
    unit: TrainableUnit
    effective: ConfigTree
    meta: DatasetMeta | None
    automl: bool


@dataclass(frozen=True)
class Finding:
    severity: Severity
    code: str
    message: str
    pos: SourcePos
    fix: Callable[[ConfigTree], ConfigTree] | None = None
    fix_note: str | None = None


@dataclass(frozen=True)
class LintRule:
    id: str
    check: Callable[[LintContext], list[Finding]]


def _is_ann(ctx: LintContext) -> bool:
    return ctx.unit.kind == "network" or ctx.unit.algorithm == "mlp"


def _unscaled_columns(ctx: LintContext) -> list[str]:
    if ctx.meta is None:
        return []
    unscaled = []
    for col in ctx.unit.features:
        if col not in ctx.meta.numeric:
            continue
        lo = ctx.meta.col_min.get(col, 0.0)
        hi = ctx.meta.col_max.get(col, 0.0)
        if abs(lo) > UNSCALED_MAGNITUDE or abs(hi) > UNSCALED_MAGNITUDE:
            unscaled.append(col)
    return unscaled


def _r1_learning_rate(ctx: LintContext) -> list[Finding]:
    lr = ctx.effective.lookup("optimizer.learning_rate")
    if lr is None or 0 < float(lr) <= 1:
        return []
    return [
        Finding(
            Severity.WARNING,
            "lint-r1",
            f"unit '{ctx.unit.name}': learning_rate {lr} outside the recommended (0, 1]",
            ctx.unit.pos,
        )
    ]


def _r2_dropout(ctx: LintContext) -> list[Finding]:
    dropout = ctx.effective.get("dropout")
    if dropout is None or 0 <= float(dropout) < 1:
        return []
    return [
        Finding(
            Severity.ERROR,
            "lint-r2",
            f"unit '{ctx.unit.name}': dropout {dropout} must lie in [0, 1)",
            ctx.unit.pos,
        )
    ]


def _r3_feature_scaling(ctx: LintContext) -> list[Finding]:
    if not _is_ann(ctx):
        return []
    if bool(ctx.effective.get("standardize")) or bool(ctx.effective.get("normalize")):
        return []
    unscaled = _unscaled_columns(ctx)
    if not unscaled:
        return []
    shown = ", ".join(unscaled[:4]) + (", ..." if len(unscaled) > 4 else "")
    return [
        Finding(
            Severity.WARNING,
            "lint-r3",
            f"unit '{ctx.unit.name}': numeric features are unscaled ({shown}); "
            "standardization is recommended for ANN training",
            ctx.unit.pos,
            fix=lambda raw: raw.with_entry("standardize", True),
            fix_note="enabled feature standardization in the preprocessing plan",
        )
    ]


def _r4_sequential_shuffle(ctx: LintContext) -> list[Finding]:
    if not ctx.unit.sequential:
        return []
    if not bool(ctx.effective.get("shuffle", False)):
        return []
    return [
        Finding(
            Severity.ERROR,
            "lint-r4",
            f"unit '{ctx.unit.name}': dataset is sequential but shuffle is enabled",
            ctx.unit.pos,
            fix=lambda raw: raw.with_entry("shuffle", False),
            fix_note="disabled shuffling for sequential data",
        )
    ]


def _r5_epochs(ctx: LintContext) -> list[Finding]:
    epochs = ctx.effective.get("num_epoch")
    if epochs is None or int(epochs) >= 1:
        return []
    return [
        Finding(
            Severity.ERROR,
            "lint-r5",
            f"unit '{ctx.unit.name}': num_epoch must be at least 1",
            ctx.unit.pos,
        )
    ]


LINT_RULES: list[LintRule] = [
    LintRule("R1", _r1_learning_rate),
    LintRule("R2", _r2_dropout),
    LintRule("R3", _r3_feature_scaling),
    LintRule("R4", _r4_sequential_shuffle),
    LintRule("R5", _r5_epochs),
]


def derive_plan(unit: TrainableUnit, effective: ConfigTree) -> PreprocessPlan:
    """Preprocessing plan implied by a unit's effective config and label mode."""
    steps: list[PlanStep] = []
    if bool(effective.get("standardize")):
        steps.append(PlanStep("standardize", unit.features))
    if bool(effective.get("normalize")):
        steps.append(PlanStep("normalize", unit.features))
    classification = unit.algorithm in ("mlp", "logistic_regression") or unit.kind == "network"
    if unit.labels_mode == "ON" and classification:
        steps.append(PlanStep("one_hot"))
    return PreprocessPlan(tuple(steps))


def lint_automl(
    unit: ModelUnit,
    automl_mode: bool,
    effective_configs: dict[str, ConfigTree],
    rules: list[LintRule] | None = None,
) -> tuple[list[Diagnostic], ModelUnit]:
    """Run the lint rule set over every trainable unit.

    With automl_mode off the unit is returned untouched. With it on, each
    fixable finding rewrites the owning unit's raw config, the finding is
    downgraded to an applied-fix info diagnostic, and the caller should
    re-derive effective configs from the returned unit.
    """
    rules = LINT_RULES if rules is None else rules
    sink = DiagnosticSink()
    rewritten: dict[str, TrainableUnit] = {}

    for tu in unit.train_units:
        effective = effective_configs.get(tu.name, ConfigTree())
        # dataset availability is a precondition; data rules skip when absent
        meta = read_dataset_meta(os.path.join(unit.manifest.root, tu.dataset))
        ctx = LintContext(tu, effective, meta, automl_mode)
        for rule in rules:
            for finding in rule.check(ctx):
                if automl_mode and finding.fix is not None:
                    current = rewritten.get(tu.name, tu)
                    rewritten[tu.name] = replace(current, raw_config=finding.fix(current.raw_config))
                    sink.info(
                        "lint-autofix",
                        f"unit '{tu.name}' [{rule.id}]: {finding.fix_note}",
                        finding.pos,
                    )
                else:
                    sink.add(Diagnostic(finding.severity, finding.code, finding.message, finding.pos))

    if not rewritten:
        return sink.sorted(), unit
    new_units = tuple(rewritten.get(tu.name, tu) for tu in unit.train_units)
    return sink.sorted(), replace(unit, train_units=new_units)
