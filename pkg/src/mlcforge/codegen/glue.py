"""Runtime-glue generation: per-thing statechart tables, message codecs, and
bridge call sites for the ML actions.

The glue is an ECMAScript module mirroring what a deployed thing needs at
runtime: a transition table (state x trigger -> guard, actions, next state),
codecs matching the line-delimited wire format, and exactly one
``rt.bridge.call(...)`` site per da_* action in the statechart.
"""

from __future__ import annotations

from ..frontend.printer import print_value_type
from ..model import (
    AssignAction,
    Binary,
    DaPredict,
    DaPreprocess,
    DaTrain,
    Expr,
    Lit,
    Name,
    SendAction,
    ThingDef,
    Unary,
)
from .fileset import GeneratedFileSet, sanitize_identifier, text_file
from . import header_comment

_JS_OPS = {"&&": "&&", "||": "||", "==": "===", "!=": "!==", "<": "<", "<=": "<=",
           ">": ">", ">=": ">=", "+": "+", "-": "-", "*": "*", "/": "/"}


def expr_to_js(expr: Expr) -> str:
    if isinstance(expr, Lit):
        if isinstance(expr.value, bool):
            return "true" if expr.value else "false"
        if isinstance(expr.value, str):
            escaped = (
                expr.value.replace("\\", "\\\\").replace('"', '\\"')
                .replace("\n", "\\n").replace("\t", "\\t")
            )
            return f'"{escaped}"'
        return repr(expr.value)
    if isinstance(expr, Name):
        return f"scope.{sanitize_identifier(expr.id)[0]}"
    if isinstance(expr, Unary):
        return f"({expr.op}{expr_to_js(expr.operand)})"
    if isinstance(expr, Binary):
        return f"({expr_to_js(expr.left)} {_JS_OPS[expr.op]} {expr_to_js(expr.right)})"
    raise TypeError(f"not an expression: {expr!r}")


def _action_js(thing: ThingDef, action, label: str) -> str:
    if isinstance(action, DaPreprocess):
        return (
            f'  "{label}": async (rt, scope) => {{\n'
            f'    await rt.bridge.call("PREPROCESS", rt.preprocessPayload());\n'
            f"  }},"
        )
    if isinstance(action, DaTrain):
        return (
            f'  "{label}": async (rt, scope) => {{\n'
            f'    await rt.bridge.call("TRAIN", rt.trainPayload());\n'
            f"  }},"
        )
    if isinstance(action, DaPredict):
        features = ", ".join(expr_to_js(f) for f in action.features)
        result = sanitize_identifier(action.result)[0]
        return (
            f'  "{label}": async (rt, scope) => {{\n'
            f'    const res = await rt.bridge.call("PREDICT", {{ features: [{features}] }});\n'
            f"    scope.{result} = rt.store(res.output);\n"
            f"  }},"
        )
    if isinstance(action, SendAction):
        args = ", ".join(expr_to_js(a) for a in action.args)
        return (
            f'  "{label}": async (rt, scope) => {{\n'
            f'    rt.send("{action.port}", "{action.message}", [{args}]);\n'
            f"  }},"
        )
    if isinstance(action, AssignAction):
        prop = sanitize_identifier(action.prop)[0]
        return f'  "{label}": async (rt, scope) => {{\n    scope.{prop} = {expr_to_js(action.expr)};\n  }},'
    raise TypeError(f"not an action: {action!r}")


def generate_runtime_glue(thing: ThingDef) -> GeneratedFileSet:
    """Emit ``gen/runtime/<thing>/glue.mjs`` for one thing."""
    name, renamed = sanitize_identifier(thing.name)
    lines: list[str] = [header_comment()]
    lines.append(f"// runtime glue for thing '{thing.name}'")
    if renamed:
        lines.append(f"// identifier mapping: '{thing.name}' -> '{name}'")
    lines.append("")
    lines.append(f'export const THING = "{thing.name}";')
    chart = thing.statechart
    lines.append(f'export const INITIAL_STATE = "{chart.initial}";')
    lines.append("")

    lines.append("export const MESSAGES = {")
    for message in thing.messages:
        params = ", ".join(
            f'{{ name: "{pname}", type: "{print_value_type(ptype)}" }}' for pname, ptype in message.params
        )
        lines.append(f'  {sanitize_identifier(message.name)[0]}: {{ wire: "{message.name}", params: [{params}] }},')
    lines.append("};")
    lines.append("")
    lines.append("// codec for the line-delimited frame payloads")
    lines.append("export function encodeMessage(name, args) {")
    lines.append("  const spec = MESSAGES[name];")
    lines.append("  const fields = spec.params.map((p, i) => `${p.name}: ${JSON.stringify(args[i])}`);")
    lines.append('  return "{" + fields.join(" ") + "}";')
    lines.append("}")
    lines.append("")

    guard_lines: list[str] = []
    action_lines: list[str] = []
    table_lines: list[str] = []
    guard_count = 0
    action_count = 0
    for t in chart.transitions:
        guard_ref = "null"
        if t.guard is not None:
            guard_name = f"guard_{guard_count}"
            guard_count += 1
            guard_lines.append(f"  {guard_name}: (scope) => {expr_to_js(t.guard)},")
            guard_ref = f'"{guard_name}"'
        labels: list[str] = []
        for action in t.actions:
            kind = type(action).__name__
            label = f"action_{action_count}_{kind}"
            action_count += 1
            action_lines.append(_action_js(thing, action, label))
            labels.append(f'"{label}"')
        if t.trigger is None:
            trigger = "null"
        else:
            params = ", ".join(f'"{p}"' for p in t.trigger.params)
            trigger = f'{{ port: "{t.trigger.port}", message: "{t.trigger.message}", params: [{params}] }}'
        table_lines.append(
            f'  {{ from: "{t.source}", to: "{t.target}", trigger: {trigger}, '
            f"guard: {guard_ref}, actions: [{', '.join(labels)}] }},"
        )

    lines.append("export const GUARDS = {")
    lines.extend(guard_lines)
    lines.append("};")
    lines.append("")
    lines.append("export const ACTIONS = {")
    lines.extend(action_lines)
    lines.append("};")
    lines.append("")
    lines.append("// transition table: state x trigger -> guard ref, action list, next state")
    lines.append("export const TRANSITIONS = [")
    lines.extend(table_lines)
    lines.append("];")
    lines.append("")

    text = "\n".join(lines)
    return GeneratedFileSet((text_file(f"gen/runtime/{thing.name}/glue.mjs", text, "runtime-glue"),))
