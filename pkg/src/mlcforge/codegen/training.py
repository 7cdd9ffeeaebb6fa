"""Training-program generation.

Each trainable unit gets ``gen/train/<unit>/train.plan`` (the canonical
key-value training plan, also the TRAIN bridge payload) and ``train.mjs``
(a runnable program that feeds the plan to the runtime library). Output
paths and warm-start arguments are intentionally absent from the plan: the
build executor supplies them per invocation, keeping generated bytes a pure
function of the model unit.
"""

from __future__ import annotations

from ..analysis import UnitInfo
from ..model import ConfigTree, EnumToken
from ..frontend.printer import print_config_tree
from .backends import BackendAdapter, ModelSpec, loss_for, model_spec_for
from .fileset import GeneratedFileSet, text_file
from . import header_comment


def _plan_steps_tree(info: UnitInfo) -> ConfigTree:
    entries = []
    for i, step in enumerate(info.plan.steps, start=1):
        fields: list[tuple[str, object]] = [("kind", EnumToken(step.kind))]
        if step.columns:
            fields.append(("columns", tuple(step.columns)))
        entries.append((f"s{i}", ConfigTree(tuple(fields))))
    return ConfigTree(tuple(entries))


def training_plan_tree(info: UnitInfo, spec: ModelSpec, backend: BackendAdapter) -> ConfigTree:
    unit = info.unit
    data_entries: list[tuple[str, object]] = [
        ("dataset", unit.dataset),
        ("features", tuple(unit.features)),
        ("labels_mode", EnumToken(unit.labels_mode)),
    ]
    if unit.label is not None:
        data_entries.append(("label", unit.label))

    train_entries: list[tuple[str, object]] = [
        ("num_epoch", info.effective.get("num_epoch")),
        ("batch_size", info.effective.get("batch_size")),
        ("seed", info.effective.get("seed")),
        ("shuffle", info.effective.get("shuffle")),
        ("validation_split", info.effective.get("validation_split")),
        ("loss", EnumToken(loss_for(info, spec))),
        ("optimizer", info.effective.get("optimizer", ConfigTree())),
    ]

    results: list[tuple[str, object]] = []
    if unit.training_results:
        results.append(("training", unit.training_results))
    if unit.prediction_results:
        results.append(("prediction", unit.prediction_results))

    entries: list[tuple[str, object]] = [
        ("unit", unit.name),
        ("backend", EnumToken(backend.id)),
        ("model", spec.to_tree()),
        ("data", ConfigTree(tuple(data_entries))),
        ("plan", _plan_steps_tree(info)),
        ("train", ConfigTree(tuple(train_entries))),
    ]
    if results:
        entries.append(("results", ConfigTree(tuple(results))))
    return ConfigTree(tuple(entries))


_TRAIN_MJS = """{header}
// Standalone training program for unit '{unit}'. Requires the
// mlcforge-runtime package (the same library the bridge server runs on).
//
//   node train.mjs --out-archive <path.mlcw> --out-log <path.log> [--warm <prior.mlcw>]

import {{ runTrainingPlanFile }} from "mlcforge-runtime";
import {{ fileURLToPath }} from "node:url";

const planPath = fileURLToPath(new URL("./train.plan", import.meta.url));
runTrainingPlanFile(planPath, process.argv.slice(2)).then(
  (summary) => {{
    process.stdout.write(`final_acc=${{summary.finalMetric}}\\n`);
  }},
  (err) => {{
    process.stderr.write(String(err && err.stack ? err.stack : err) + "\\n");
    process.exit(1);
  }},
);
"""


def generate_training_program(info: UnitInfo, backend: BackendAdapter) -> GeneratedFileSet:
    """Emit the plan + program pair for one trainable unit.

    Raises UnsupportedCapability when the unit needs anything the backend
    cannot provide (non-MLP layers, unsupported label modes, algorithms).
    """
    spec = model_spec_for(info, backend)
    plan = training_plan_tree(info, spec, backend)
    base = f"gen/train/{info.unit.name}"
    plan_text = print_config_tree(plan) + "\n"
    program = _TRAIN_MJS.format(header=header_comment(), unit=info.unit.name)
    return GeneratedFileSet(
        (
            text_file(f"{base}/train.plan", plan_text, "training-program"),
            text_file(f"{base}/train.mjs", program, "training-program"),
        )
    )
