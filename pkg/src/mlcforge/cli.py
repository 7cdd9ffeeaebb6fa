"""``mlcc``: the toolchain command line.

Subcommands: check, lint, build, train, run, pack, artifacts. Exit codes:
0 success, 1 diagnostics errors, 2 build/training/run failure, 3 usage.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .analysis import AnalysisResult, analyze_unit
from .bridge import DEFAULT_TIMEOUT, launcher_from_command
from .buildsys import (
    CorruptStore,
    PlanError,
    Store,
    execute,
    package_dataset,
    package_model,
    package_source,
    plan as make_plan,
    watch as watch_files,
)
from .codegen import UnsupportedCapability, generate_all, write_fileset
from .diagnostics import render_all
from .frontend import load_project
from .model import ModelUnit
from .report import (
    diagnostics_report,
    render_trace_timeline,
    render_training_figures,
    write_report,
)
from .simulator import (
    SimulationError,
    Simulation,
    assert_trace,
    load_scenario,
)
from .weights import import_resolver_for

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_FAILURE = 2
EXIT_USAGE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 3, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mlcc", description="model-driven toolchain for ML-enabled component systems")
    parser.add_argument("--version", action="version", version=f"mlcc {__version__}")
    parser.add_argument("-C", "--project", default=".", metavar="DIR", help="project directory (with mlc.project)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p_check = sub.add_parser("check", help="parse and analyze; exit 1 on errors")
    _report_flags(p_check)

    p_lint = sub.add_parser("lint", help="run analysis plus AutoML lint rules")
    p_lint.add_argument("--automl", action="store_true", help="apply rule-based auto-fixes")
    _report_flags(p_lint)

    p_build = sub.add_parser("build", help="plan, generate, and train what changed")
    p_build.add_argument("--force", "--retrain", dest="force", action="store_true",
                         help="cold-train everything regardless of digests")
    p_build.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel training units")
    p_build.add_argument("--bridge", metavar="CMD", help="bridge server command (overrides manifest)")
    p_build.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, metavar="SECS")
    p_build.add_argument("--watch", action="store_true", help="poll for changes and rebuild")
    _report_flags(p_build)

    p_train = sub.add_parser("train", help="train selected units (default: all)")
    p_train.add_argument("units", nargs="*", metavar="UNIT")
    p_train.add_argument("--force", action="store_true", help="retrain even when up to date")
    p_train.add_argument("--jobs", type=int, default=1, metavar="N")
    p_train.add_argument("--bridge", metavar="CMD")
    p_train.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, metavar="SECS")
    _report_flags(p_train)

    p_run = sub.add_parser("run", help="simulate a scenario")
    p_run.add_argument("scenario", metavar="SCENARIO.scn")
    p_run.add_argument("--predictor", choices=("oracle", "trained"), help="override every predictor binding")
    p_run.add_argument("--trace-out", metavar="PATH", help="write the trace to a file")
    p_run.add_argument("--bridge", metavar="CMD")
    p_run.add_argument("--step-limit", type=int, metavar="N")
    _report_flags(p_run)

    p_pack = sub.add_parser("pack", help="package a deterministic artifact archive")
    p_pack.add_argument("kind", choices=("source", "model", "dataset"))
    p_pack.add_argument("--unit", metavar="NAME", help="trained unit (model archives)")
    p_pack.add_argument("--dataset", metavar="PATH", help="dataset path (dataset archives)")
    p_pack.add_argument("--out", metavar="PATH", help="output archive path")

    p_artifacts = sub.add_parser("artifacts", help="inspect the artifact store")
    p_artifacts.add_argument("action", choices=("list",))

    return parser


def _report_flags(parser) -> None:
    parser.add_argument("--report", metavar="PATH", help="write a machine-readable report")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering next to the report")


def _load_and_analyze(project_dir: str, automl: bool | None = None) -> tuple[ModelUnit | None, AnalysisResult | None, list]:
    unit, diags = load_project(project_dir)
    if unit is None:
        return None, None, diags
    resolver = import_resolver_for(unit.manifest.root)
    analysis = analyze_unit(unit, import_resolver=resolver, automl=automl)
    return unit, analysis, diags + analysis.diagnostics


def _print_diags(diags) -> None:
    for diag in diags:
        print(diag.render())


def _no_errors(diags) -> bool:
    from .diagnostics import Severity

    return not any(d.severity is Severity.ERROR for d in diags)


def _store_for(unit: ModelUnit) -> Store:
    return Store(os.path.join(unit.manifest.root, unit.manifest.store))


def _cmd_check(args) -> int:
    unit, analysis, diags = _load_and_analyze(args.project)
    _print_diags(diags)
    ok = unit is not None and analysis is not None and _no_errors(diags)
    from .diagnostics import Severity

    errors = sum(1 for d in diags if d.severity is Severity.ERROR)
    print(f"check: {len(diags)} diagnostic(s), {errors} error(s)")
    if args.report and analysis is not None:
        tree = diagnostics_report("check", analysis.unit.manifest.project, diags, ok)
        write_report(tree, args.report)
    return EXIT_OK if ok else EXIT_DIAGNOSTICS


def _cmd_lint(args) -> int:
    unit, analysis, diags = _load_and_analyze(args.project, automl=args.automl)
    _print_diags(diags)
    ok = unit is not None and analysis is not None and _no_errors(diags)
    if args.report and analysis is not None:
        tree = diagnostics_report("lint", analysis.unit.manifest.project, diags, ok)
        write_report(tree, args.report)
    return EXIT_OK if ok else EXIT_DIAGNOSTICS


def _launcher_for(analysis: AnalysisResult, bridge_arg: str | None, timeout: float):
    command = bridge_arg or analysis.unit.manifest.bridge
    if not command:
        return None
    return launcher_from_command(command, cwd=analysis.unit.manifest.root, timeout=timeout)


def _build_once(args, selected_units=None) -> int:
    unit, analysis, diags = _load_and_analyze(args.project)
    _print_diags(diags)
    if unit is None or analysis is None or not _no_errors(diags):
        return EXIT_DIAGNOSTICS
    store = _store_for(analysis.unit)
    try:
        build_plan = make_plan(analysis, store, force=args.force)
    except (PlanError, CorruptStore) as exc:
        print(f"build: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _print_diags(list(build_plan.infos))

    if selected_units is not None:
        missing = [u for u in selected_units if build_plan.entry(u) is None]
        if missing:
            print(f"train: unknown unit(s): {', '.join(missing)}", file=sys.stderr)
            return EXIT_USAGE
        from dataclasses import replace as _replace

        from .buildsys.planner import Decision

        entries = []
        for entry in build_plan.entries:
            if entry.unit not in selected_units:
                entries.append(_replace(entry, decision=Decision("skip", "not-selected")))
            else:
                entries.append(entry)
        build_plan = _replace(build_plan, entries=tuple(entries))

    try:
        fileset = generate_all(analysis)
    except UnsupportedCapability as exc:
        print(f"codegen: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    write_fileset(fileset, analysis.unit.manifest.root)

    launcher = _launcher_for(analysis, args.bridge, args.timeout)
    needs_training = any(e.decision.trains for e in build_plan.entries)
    if needs_training and launcher is None:
        print("build: training required but no bridge command configured "
              "(set 'bridge = ...' in mlc.project or pass --bridge)", file=sys.stderr)
        return EXIT_FAILURE

    report = execute(analysis, build_plan, store, launcher, jobs=args.jobs, timeout=args.timeout)
    for result in report.results:
        metric = f" metric={result.metric:.4f}" if result.metric is not None else ""
        extra = f" ({result.error})" if result.error else ""
        print(f"{result.unit}: {result.decision}[{result.reason}] -> {result.status}"
              f" {result.wall_ms} ms{metric}{extra}")
    if args.report:
        write_report(report.to_tree(), args.report)
        if not args.no_figures:
            for path in render_training_figures(report, analysis.unit.manifest.root, args.report):
                print(f"figure: {path}")
    return EXIT_OK if report.ok else EXIT_FAILURE


def _cmd_build(args) -> int:
    code = _build_once(args)
    if not args.watch:
        return code
    patterns = tuple(pattern for _, pattern in _globs(args.project))
    print("watching for changes (Ctrl-C to stop)")
    watch_files(args.project, patterns, lambda: _build_once(args))
    return EXIT_OK


def _globs(project_dir: str):
    unit, diags = load_project(project_dir)
    if unit is None:
        return [("networks", "*.nal"), ("configs", "*.tcl"), ("systems", "*.scl")]
    return list(unit.manifest.globs)


def _cmd_train(args) -> int:
    selected = set(args.units) if args.units else None
    args.watch = False
    return _build_once(args, selected_units=selected)


def _cmd_run(args) -> int:
    unit, analysis, diags = _load_and_analyze(args.project)
    _print_diags(diags)
    if unit is None or analysis is None or not _no_errors(diags):
        return EXIT_DIAGNOSTICS
    scenario_path = args.scenario
    if not os.path.isabs(scenario_path) and not os.path.isfile(scenario_path):
        candidate = os.path.join(args.project, scenario_path)
        if os.path.isfile(candidate):
            scenario_path = candidate
    if not os.path.isfile(scenario_path):
        print(f"run: scenario file not found: {args.scenario}", file=sys.stderr)
        return EXIT_USAGE
    scenario, sdiags = load_scenario(scenario_path, root=analysis.unit.manifest.root)
    _print_diags(sdiags)
    if scenario is None:
        return EXIT_DIAGNOSTICS
    if args.step_limit:
        scenario.step_limit = args.step_limit

    store = _store_for(analysis.unit)
    launcher = _launcher_for(analysis, args.bridge, DEFAULT_TIMEOUT)
    started = time.monotonic()
    try:
        sim = Simulation(
            analysis, scenario, store=store, bridge_launcher=launcher,
            predictor_override=args.predictor,
        )
        trace = sim.run()
    except SimulationError as exc:
        print(f"run: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    wall_ms = int((time.monotonic() - started) * 1000)

    if args.trace_out:
        os.makedirs(os.path.dirname(os.path.abspath(args.trace_out)), exist_ok=True)
        with open(args.trace_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(trace.render())
    else:
        sys.stdout.write(trace.render())

    code = EXIT_OK
    report = None
    if scenario.assertions:
        report = assert_trace(trace, scenario.assertions)
        print(report.render())
        if not report.ok:
            code = EXIT_FAILURE
    print(f"run: {len(trace)} events in {wall_ms} ms")

    if args.report:
        from .model import ConfigTree

        entries: list[tuple[str, object]] = [
            ("kind", "run"),
            ("scenario", scenario.name),
            ("events", len(trace)),
            ("wall_ms", wall_ms),
            ("ok", code == EXIT_OK),
        ]
        if report is not None:
            entries.append(("assertions", report.to_tree()))
        write_report(ConfigTree(tuple(entries)), args.report)
        if not args.no_figures:
            figure = render_trace_timeline(trace, args.report)
            if figure:
                print(f"figure: {figure}")
    return code


def _cmd_pack(args) -> int:
    unit, analysis, diags = _load_and_analyze(args.project)
    if unit is None or analysis is None:
        _print_diags(diags)
        return EXIT_DIAGNOSTICS
    store = _store_for(analysis.unit)
    store.ensure()
    root = analysis.unit.manifest.root
    out_dir = os.path.join(store.root, "packages")
    try:
        if args.kind == "source":
            out = args.out or os.path.join(out_dir, f"{analysis.unit.manifest.project}-src.tar")
            record = package_source(analysis.unit, store, out)
        elif args.kind == "model":
            if not args.unit:
                print("pack model: --unit is required", file=sys.stderr)
                return EXIT_USAGE
            candidates = store.candidates(args.unit)
            if not candidates:
                print(f"pack model: no trained archive for unit '{args.unit}'", file=sys.stderr)
                return EXIT_FAILURE
            out = args.out or os.path.join(out_dir, f"{args.unit}-model.tar")
            record = package_model(analysis.unit, store, candidates[0], out)
        else:
            dataset = args.dataset
            if not dataset and args.unit:
                info = analysis.units.get(args.unit)
                dataset = info.unit.dataset if info else None
            if not dataset:
                print("pack dataset: --dataset (or --unit) is required", file=sys.stderr)
                return EXIT_USAGE
            link = "-"
            if args.unit:
                candidates = store.candidates(args.unit)
                if candidates:
                    link = candidates[0].archive_path
            name = os.path.splitext(os.path.basename(dataset))[0]
            out = args.out or os.path.join(out_dir, f"{name}-dataset.tar")
            record = package_dataset(analysis.unit, store, dataset, out, link=link)
    except Exception as exc:  # MissingInput, ArchiveError, OSError
        print(f"pack: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"packaged {record.kind}: {record.path} (sha256 {record.digest[:16]}...)")
    return EXIT_OK


def _cmd_artifacts(args) -> int:
    unit, diags = load_project(args.project)
    if unit is None:
        _print_diags(diags)
        return EXIT_DIAGNOSTICS
    store = Store(os.path.join(unit.manifest.root, unit.manifest.store))
    try:
        index = store.read_index()
        artifacts = store.read_artifacts()
    except CorruptStore as exc:
        print(f"artifacts: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if not index and not artifacts:
        print("artifact store is empty")
        return EXIT_OK
    for record in index:
        print(
            f"model\t{record.unit}\tbuild={record.build_no}\trows={record.row_count}\t{record.archive_path}"
        )
    for artifact in artifacts:
        print(f"{artifact.kind}\t{artifact.path}\tsha256={artifact.digest[:16]}...\tlink={artifact.link}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    handlers = {
        "check": _cmd_check,
        "lint": _cmd_lint,
        "build": _cmd_build,
        "train": _cmd_train,
        "run": _cmd_run,
        "pack": _cmd_pack,
        "artifacts": _cmd_artifacts,
    }
    try:
        return handlers[args.command](args)
    except KeyboardInterrupt:
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
