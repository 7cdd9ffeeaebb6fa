from __future__ import annotations

import os
import sys

from mlcforge.buildsys import Store, execute, plan
from mlcforge.buildsys.planner import BuildPlan, Decision, UnitPlan
from mlcforge.report import parse_training_log

from conftest import MOCK_BRIDGE, load_analyzed


class CountingLauncher:
    def __init__(self, inner):
        self.inner = inner
        self.count = 0

    def __call__(self):
        self.count += 1
        return self.inner()


def test_execute_trains_and_updates_store(tmp_project, mock_launcher):
    analysis, _ = load_analyzed(tmp_project)
    store = Store(os.path.join(tmp_project, ".mlc-store"))
    launcher = CountingLauncher(mock_launcher(tmp_project))
    report = execute(analysis, plan(analysis, store), store, launcher)
    assert report.ok
    assert launcher.count == 3  # one bridge per trained unit
    for result in report.results:
        assert result.status == "ok"
        assert result.metric is not None
        assert os.path.isfile(os.path.join(tmp_project, result.archive))
    assert {r.unit for r in store.read_index()} == {"digits", "operators", "daml_server"}


def test_all_skip_run_makes_zero_bridge_calls(tmp_project, mock_launcher):
    analysis, _ = load_analyzed(tmp_project)
    store = Store(os.path.join(tmp_project, ".mlc-store"))
    execute(analysis, plan(analysis, store), store, mock_launcher(tmp_project))

    counting = CountingLauncher(mock_launcher(tmp_project))
    second = execute(analysis, plan(analysis, store), store, counting)
    assert counting.count == 0
    assert all(r.status == "skipped" for r in second.results)
    assert second.ok


def test_warm_retrain_log_resumes_at_next_epoch(tmp_project, mock_launcher):
    analysis, _ = load_analyzed(tmp_project)
    store = Store(os.path.join(tmp_project, ".mlc-store"))
    execute(analysis, plan(analysis, store), store, mock_launcher(tmp_project))

    with open(os.path.join(tmp_project, "data", "digits.csv"), "a") as fh:
        fh.write(",".join(["1"] * 64) + ",0\n")
    analysis2, _ = load_analyzed(tmp_project)
    plan2 = plan(analysis2, store)
    assert plan2.entry("digits").decision.kind == "warm-retrain"
    report = execute(analysis2, plan2, store, mock_launcher(tmp_project))
    result = report.result("digits")
    assert result.status == "ok"
    points = parse_training_log(open(os.path.join(tmp_project, result.log)).read())
    # prior run trained 30 epochs; warm start resumes at 31
    assert points[0].epoch == 31


def test_failure_aborts_dependents_not_independents(tmp_path):
    """Synthetic plan: b depends on a (which fails); c is independent."""
    import subprocess

    failing = tmp_path / "failing_bridge.py"
    failing.write_text(
        "import sys\n"
        "from mlcforge.bridge import decode_frame, encode_response\n"
        "for line in sys.stdin:\n"
        "    f = decode_frame(line)\n"
        "    if f is None: continue\n"
        "    sys.stdout.write(encode_response(f.id, False, 'training exploded'))\n"
        "    sys.stdout.flush()\n"
    )

    class FakeInfoMap(dict):
        pass

    # build a tiny project with three identical units a, b, c
    root = tmp_path / "proj"
    root.mkdir()
    (root / "mlc.project").write_text(
        "project = deps\n"
        + "".join(
            f"train.{u}.arch = N\ntrain.{u}.dataset = d.csv\ntrain.{u}.config = cfg\n"
            for u in ("a", "b", "c")
        )
    )
    (root / "d.csv").write_text("x,label\n1,0\n2,1\n")
    (root / "cfg.tcl").write_text("standardize: true\n")
    (root / "n.nal").write_text(
        "component N { ports { in x: Q(0:16)^{1} out y: R(0:1)^{2} } "
        "net { x -> FullyConnected(2) -> Softmax -> y } }"
    )
    analysis, _ = load_analyzed(str(root))
    assert analysis.ok, [d.render() for d in analysis.diagnostics]
    store = Store(str(root / ".mlc-store"))
    base = plan(analysis, store)
    by_unit = {e.unit: e for e in base.entries}
    from dataclasses import replace

    rigged = BuildPlan(
        entries=(
            by_unit["a"],
            replace(by_unit["b"], deps=("a",)),
            by_unit["c"],
        )
    )
    from mlcforge.bridge import launcher_from_command

    launcher = launcher_from_command([sys.executable, str(failing)], cwd=str(root))
    report = execute(analysis, rigged, store, launcher)
    status = {r.unit: r.status for r in report.results}
    assert status["a"] == "failed"
    assert status["b"] == "aborted"
    assert status["c"] == "failed"  # independent unit still ran (and failed on its own)
    assert report.result("a").error and "exploded" in report.result("a").error


def test_parallel_jobs_consistent_with_serial(tmp_project, mock_launcher):
    analysis, _ = load_analyzed(tmp_project)
    store = Store(os.path.join(tmp_project, ".mlc-store"))
    report = execute(analysis, plan(analysis, store), store, mock_launcher(tmp_project), jobs=2)
    assert report.ok
    assert [r.unit for r in report.results] == ["daml_server", "digits", "operators"]


def test_report_tree_stable_keys(tmp_project, mock_launcher):
    from mlcforge.frontend.printer import print_config_tree

    analysis, _ = load_analyzed(tmp_project)
    store = Store(os.path.join(tmp_project, ".mlc-store"))
    report = execute(analysis, plan(analysis, store), store, mock_launcher(tmp_project))
    text = print_config_tree(report.to_tree())
    assert 'kind: "build"' in text
    assert text.index("daml_server") < text.index("digits") < text.index("operators")
