"""Scenario files (`.scn`): seeded, time-ordered event injections, predictor
bindings, optional per-connector latencies, and trace assertions. The file
syntax is the toolchain's nested key-value text."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from ..diagnostics import Diagnostic, DiagnosticSink, SourcePos
from ..frontend.conflang import parse_config
from ..model import ConfigTree, EnumToken

DEFAULT_STEP_LIMIT = 100_000


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class Injection:
    at: int
    thing: str
    port: str
    message: str
    args: tuple[tuple[str, object], ...]


@dataclass(frozen=True)
class Pattern:
    fields: tuple[tuple[str, object], ...]  # kind/thing/state/port/message/action + args tree

    def get(self, key: str):
        for k, v in self.fields:
            if k == key:
                return v
        return None


@dataclass(frozen=True)
class Assertion:
    name: str
    form: str  # eventually | never | order | after
    first: Pattern
    then: Pattern | None = None


@dataclass
class Scenario:
    name: str = "scenario"
    pipeline: str | None = None
    seed: int = 0
    step_limit: int = DEFAULT_STEP_LIMIT
    inputs: dict[str, tuple[float, ...]] = field(default_factory=dict)
    injections: list[Injection] = field(default_factory=list)
    predictor_modes: dict[str, str] = field(default_factory=dict)  # instance -> oracle|trained
    oracle_tables: dict[str, dict[str, tuple[float, ...]]] = field(default_factory=dict)
    latencies: dict[tuple[str, str, str, str], int] = field(default_factory=dict)
    assertions: list[Assertion] = field(default_factory=list)


def _as_vector(value, what: str) -> tuple[float, ...]:
    if not isinstance(value, tuple):
        raise ScenarioError(f"{what} must be a list of numbers")
    out = []
    for item in value:
        if not isinstance(item, (int, float)) or isinstance(item, bool):
            raise ScenarioError(f"{what} must contain only numbers")
        out.append(float(item))
    return tuple(out)


def _load_csv_row(root: str, file: str, row: int, label_column: str) -> tuple[float, ...]:
    path = os.path.join(root, file)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = [c.strip().strip('"') for c in fh.readline().strip().split(",")]
        for index, line in enumerate(fh):
            if index == row:
                cells = line.strip().split(",")
                return tuple(
                    float(cell) for col, cell in zip(header, cells) if col != label_column
                )
    raise ScenarioError(f"{file} has no row {row}")


def _parse_pattern(tree: ConfigTree) -> Pattern:
    fields: list[tuple[str, object]] = []
    for key, value in tree.entries:
        if key == "args" and isinstance(value, ConfigTree):
            fields.append((key, value))
        elif isinstance(value, EnumToken):
            fields.append((key, value.value))
        else:
            fields.append((key, value))
    return Pattern(tuple(fields))


def _parse_assertions(tree: ConfigTree) -> list[Assertion]:
    assertions: list[Assertion] = []
    for name, body in tree.entries:
        if not isinstance(body, ConfigTree) or not body.entries:
            raise ScenarioError(f"assertion '{name}' must be a block with one form")
        form, payload = body.entries[0]
        if form not in ("eventually", "never", "order", "after"):
            raise ScenarioError(f"assertion '{name}': unknown form '{form}'")
        if not isinstance(payload, ConfigTree):
            raise ScenarioError(f"assertion '{name}': form body must be a block")
        if form in ("order", "after"):
            first = payload.get("first")
            then = payload.get("then")
            if not isinstance(first, ConfigTree) or not isinstance(then, ConfigTree):
                raise ScenarioError(f"assertion '{name}': {form} needs 'first' and 'then' blocks")
            assertions.append(Assertion(name, form, _parse_pattern(first), _parse_pattern(then)))
        else:
            assertions.append(Assertion(name, form, _parse_pattern(payload)))
    return assertions


def scenario_from_tree(tree: ConfigTree, root: str) -> Scenario:
    scenario = Scenario()
    name = tree.get("scenario")
    if name is not None:
        scenario.name = str(name)
    pipeline = tree.get("pipeline")
    if pipeline is not None:
        scenario.pipeline = str(pipeline)
    seed = tree.get("seed")
    if seed is not None:
        if not isinstance(seed, int) or seed < 0 or seed >= 2**64:
            raise ScenarioError("seed must be an unsigned 64-bit integer")
        scenario.seed = seed
    limit = tree.get("step_limit")
    if limit is not None:
        scenario.step_limit = int(limit)

    inputs = tree.get("inputs")
    if isinstance(inputs, ConfigTree):
        for key, value in inputs.entries:
            if isinstance(value, ConfigTree):
                file = value.get("file")
                row = value.get("row")
                if file is None or row is None:
                    raise ScenarioError(f"input '{key}' needs file and row")
                label_column = str(value.get("label_column", "label"))
                scenario.inputs[key] = _load_csv_row(root, str(file), int(row), label_column)
            else:
                scenario.inputs[key] = _as_vector(value, f"input '{key}'")

    predictors = tree.get("predictors")
    if isinstance(predictors, ConfigTree):
        for inst, mode in predictors.entries:
            mode_text = str(mode)
            if mode_text not in ("oracle", "trained"):
                raise ScenarioError(f"predictor for '{inst}' must be oracle or trained")
            scenario.predictor_modes[inst] = mode_text

    oracle = tree.get("oracle")
    if isinstance(oracle, ConfigTree):
        for inst, table in oracle.entries:
            if not isinstance(table, ConfigTree):
                raise ScenarioError(f"oracle '{inst}' must be a block of input -> vector entries")
            scenario.oracle_tables[inst] = {
                key: _as_vector(vec, f"oracle {inst}.{key}") for key, vec in table.entries
            }
            scenario.predictor_modes.setdefault(inst, "oracle")

    latencies = tree.get("latency")
    if isinstance(latencies, ConfigTree):
        for _, item in latencies.entries:
            if not isinstance(item, ConfigTree):
                raise ScenarioError("latency entries must be blocks")
            src = str(item.get("from", ""))
            dst = str(item.get("to", ""))
            ticks = int(item.get("ticks", 1))
            if "." not in src or "." not in dst or ticks < 0:
                raise ScenarioError(f"bad latency entry {src} -> {dst}")
            si, sp = src.split(".", 1)
            di, dp = dst.split(".", 1)
            scenario.latencies[(si, sp, di, dp)] = ticks

    inject = tree.get("inject")
    if isinstance(inject, ConfigTree):
        last_time = None
        for name, event in inject.entries:
            if not isinstance(event, ConfigTree):
                raise ScenarioError(f"injection '{name}' must be a block")
            at = event.get("at")
            thing = event.get("thing")
            port = event.get("port")
            message = event.get("message")
            if at is None or thing is None or port is None or message is None:
                raise ScenarioError(f"injection '{name}' needs at/thing/port/message")
            if last_time is not None and int(at) < last_time:
                raise ScenarioError(
                    f"injection '{name}': virtual times must be non-decreasing "
                    f"({at} after {last_time})"
                )
            last_time = int(at)
            args_tree = event.get("args")
            args: list[tuple[str, object]] = []
            if isinstance(args_tree, ConfigTree):
                for key, value in args_tree.entries:
                    args.append((key, value))
            scenario.injections.append(
                Injection(int(at), str(thing), str(port), str(message), tuple(args))
            )

    expects = tree.get("expect")
    if isinstance(expects, ConfigTree):
        scenario.assertions = _parse_assertions(expects)
    return scenario


def load_scenario(path: str, root: str | None = None) -> tuple[Scenario | None, list[Diagnostic]]:
    """Parse a `.scn` file; scenario-level problems come back as diagnostics."""
    sink = DiagnosticSink()
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8", errors="replace")
    rel = os.path.basename(path)
    tree, diags = parse_config(text, rel)
    sink.extend(diags)
    if tree is None or sink.has_errors:
        return None, sink.sorted()
    try:
        scenario = scenario_from_tree(tree, root or os.path.dirname(os.path.abspath(path)))
    except (ScenarioError, OSError, ValueError) as exc:
        sink.error("scn-invalid", str(exc), SourcePos(rel))
        return None, sink.sorted()
    return scenario, sink.sorted()
