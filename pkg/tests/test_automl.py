from __future__ import annotations

import os

from mlcforge.analysis import analyze_unit
from mlcforge.frontend import load_project


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def make_project(root, *, hyper: str = "", manifest_extra: str = "", rows: str = "") -> str:
    root = str(root)
    _write(
        os.path.join(root, "mlc.project"),
        "project = lintcase\nbackend = reference\nstore = .mlc-store\n" + manifest_extra,
    )
    dataset = rows or "\n".join(
        ["a,b,label"] + [f"{i * 100},{i},{i % 2}" for i in range(1, 9)]
    ) + "\n"
    _write(os.path.join(root, "data.csv"), dataset)
    _write(
        os.path.join(root, "sys.scl"),
        f"""
thing worker {{
  property y: Int = 0
  ml {{
    features a b
    labels ON label
    dataset "data.csv"
    model_algorithm mlp {{
{hyper}
    }}
  }}
  statechart {{
    initial idle
    state idle {{ / da_train -> idle }}
  }}
}}
""",
    )
    return root


def lint_codes(analysis) -> set[str]:
    return {d.code for d in analysis.diagnostics if d.code.startswith("lint-")}


def test_r1_learning_rate_warning(tmp_path):
    proj = make_project(tmp_path, hyper="      optimizer { learning_rate: 5.0 }\n      standardize: true")
    unit, _ = load_project(proj)
    analysis = analyze_unit(unit)
    assert "lint-r1" in lint_codes(analysis)
    r1 = [d for d in analysis.diagnostics if d.code == "lint-r1"]
    assert all(d.severity.value == "warning" for d in r1)


def test_r2_dropout_error_at_one(tmp_path):
    proj = make_project(tmp_path, hyper="      dropout: 1.0\n      standardize: true")
    unit, _ = load_project(proj)
    analysis = analyze_unit(unit)
    r2 = [d for d in analysis.diagnostics if d.code == "lint-r2"]
    assert r2 and all(d.severity.value == "error" for d in r2)


def test_r3_unscaled_features_warning_and_fix(tmp_path):
    proj = make_project(tmp_path)
    unit, _ = load_project(proj)
    plain = analyze_unit(unit, automl=False)
    assert "lint-r3" in lint_codes(plain)
    # automl mode rewrites the unit and reports the fix as info
    fixed = analyze_unit(unit, automl=True)
    assert "lint-autofix" in lint_codes(fixed)
    assert "lint-r3" not in lint_codes(fixed)
    info = fixed.units["worker"]
    assert bool(info.effective.get("standardize")) is True
    assert info.plan.has("standardize")
    # re-linting the fixed unit is quiet for the fixed rule
    again = analyze_unit(fixed.unit, automl=False)
    assert "lint-r3" not in lint_codes(again)


def test_r4_sequential_shuffle_error_and_fix(tmp_path):
    proj = make_project(
        tmp_path,
        hyper="      shuffle: true\n      standardize: true",
        manifest_extra="train.worker.sequential = true\n",
    )
    unit, _ = load_project(proj)
    plain = analyze_unit(unit, automl=False)
    r4 = [d for d in plain.diagnostics if d.code == "lint-r4"]
    assert r4 and all(d.severity.value == "error" for d in r4)

    fixed = analyze_unit(unit, automl=True)
    assert "lint-r4" not in lint_codes(fixed)
    assert "lint-autofix" in lint_codes(fixed)
    assert bool(fixed.units["worker"].effective.get("shuffle")) is False


def test_r5_runs_through_schema_first(tmp_path):
    # num_epoch: 0 violates the schema range, so validation already errors
    proj = make_project(tmp_path, hyper="      num_epoch: 0\n      standardize: true")
    unit, _ = load_project(proj)
    analysis = analyze_unit(unit)
    assert any(d.code == "cfg-range" for d in analysis.diagnostics)


def test_automl_off_never_rewrites(tmp_path):
    proj = make_project(tmp_path)
    unit, _ = load_project(proj)
    analysis = analyze_unit(unit, automl=False)
    assert analysis.unit is unit
    assert not unit.train_units[0].raw_config.has("standardize")


def test_clean_project_has_no_findings(tmp_path):
    proj = make_project(tmp_path, hyper="      standardize: true")
    unit, _ = load_project(proj)
    analysis = analyze_unit(unit)
    assert lint_codes(analysis) == set()
    assert analysis.ok


def test_demo_project_lints_clean(demo_dir):
    unit, _ = load_project(demo_dir)
    analysis = analyze_unit(unit, automl=True)
    assert lint_codes(analysis) == set()
