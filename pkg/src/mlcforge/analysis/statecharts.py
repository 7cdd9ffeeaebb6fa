"""Statechart well-formedness: reachability, trigger resolution, determinism,
and expression type checking for guards and actions."""

from __future__ import annotations

from ..diagnostics import Diagnostic, DiagnosticSink
from ..frontend.printer import print_expr
from ..model import (
    BOOL,
    INT,
    REAL,
    STRING,
    AssignAction,
    Binary,
    DaPredict,
    DaPreprocess,
    DaTrain,
    Expr,
    Lit,
    Name,
    ScalarType,
    SendAction,
    TensorType,
    ThingDef,
    Transition,
    Unary,
    ValueType,
)

Env = dict[str, ValueType]


def type_of(expr: Expr, env: Env, sink: DiagnosticSink) -> ValueType | None:
    """Infer an expression's type; report and return None on type errors."""
    if isinstance(expr, Lit):
        if isinstance(expr.value, bool):
            return BOOL
        if isinstance(expr.value, int):
            return INT
        if isinstance(expr.value, float):
            return REAL
        return STRING
    if isinstance(expr, Name):
        found = env.get(expr.id)
        if found is None:
            sink.error("sc-unknown-name", f"unknown name '{expr.id}'", expr.pos)
        return found
    if isinstance(expr, Unary):
        inner = type_of(expr.operand, env, sink)
        if inner is None:
            return None
        if expr.op == "-":
            if inner in (INT, REAL):
                return inner
            sink.error("sc-type", f"unary '-' needs a number, got {inner}", expr.pos)
            return None
        if inner == BOOL:
            return BOOL
        sink.error("sc-type", f"'!' needs a Bool, got {inner}", expr.pos)
        return None
    if isinstance(expr, Binary):
        left = type_of(expr.left, env, sink)
        right = type_of(expr.right, env, sink)
        if left is None or right is None:
            return None
        op = expr.op
        if op in ("+", "-", "*", "/"):
            if left in (INT, REAL) and right in (INT, REAL):
                return REAL if REAL in (left, right) else INT
            sink.error("sc-type", f"'{op}' needs numbers, got {left} and {right}", expr.pos)
            return None
        if op in ("<", "<=", ">", ">="):
            if left in (INT, REAL) and right in (INT, REAL):
                return BOOL
            sink.error("sc-type", f"'{op}' needs numbers, got {left} and {right}", expr.pos)
            return None
        if op in ("==", "!="):
            numeric = left in (INT, REAL) and right in (INT, REAL)
            if left == right or numeric:
                return BOOL
            sink.error("sc-type", f"'{op}' operands differ: {left} vs {right}", expr.pos)
            return None
        if left == BOOL and right == BOOL:
            return BOOL
        sink.error("sc-type", f"'{op}' needs Bool operands, got {left} and {right}", expr.pos)
        return None
    raise TypeError(f"not an expression: {expr!r}")


def _assignable(target: ValueType, value: ValueType) -> bool:
    if target == value:
        return True
    if target == REAL and value == INT:
        return True
    # classification results land in Int properties (argmax of the output)
    if isinstance(value, TensorType) and target == INT:
        return True
    return False


def _check_actions(thing: ThingDef, t: Transition, env: Env, sink: DiagnosticSink) -> None:
    for action in t.actions:
        if isinstance(action, (DaPreprocess, DaTrain, DaPredict)) and thing.ml_block is None:
            sink.error(
                "sc-ml-action",
                f"thing '{thing.name}' uses an ML action but declares no ml block",
                action.pos,
            )
        if isinstance(action, SendAction):
            port = thing.port(action.port)
            if port is None:
                sink.error("sc-unknown-port", f"send on undeclared port '{action.port}'", action.pos)
                continue
            if port.direction == "in":
                sink.error("sc-port-direction", f"port '{port.name}' is an in port, cannot send", action.pos)
            message = thing.message(action.message)
            if message is None:
                sink.error("sc-unknown-message", f"send of undeclared message '{action.message}'", action.pos)
                continue
            if action.message not in port.sends:
                sink.error(
                    "sc-unknown-message",
                    f"port '{port.name}' does not send message '{action.message}'",
                    action.pos,
                )
            if len(action.args) != len(message.params):
                sink.error(
                    "sc-arity",
                    f"message '{message.name}' takes {len(message.params)} argument(s), got {len(action.args)}",
                    action.pos,
                )
                continue
            for arg, (pname, ptype) in zip(action.args, message.params):
                atype = type_of(arg, env, sink)
                if atype is not None and not _assignable(ptype, atype):
                    sink.error(
                        "sc-type",
                        f"argument for '{pname}' of '{message.name}' has type {atype}, expected {ptype}",
                        action.pos,
                    )
        elif isinstance(action, AssignAction):
            prop = thing.property(action.prop)
            if prop is None:
                sink.error("sc-unknown-name", f"assignment to undeclared property '{action.prop}'", action.pos)
                continue
            vtype = type_of(action.expr, env, sink)
            if vtype is not None and not _assignable(prop.type, vtype):
                sink.error(
                    "sc-type",
                    f"cannot assign {vtype} to property '{prop.name}' of type {prop.type}",
                    action.pos,
                )
        elif isinstance(action, DaPredict):
            for feature in action.features:
                type_of(feature, env, sink)
            prop = thing.property(action.result)
            if prop is None:
                sink.error(
                    "sc-unknown-name",
                    f"da_predict stores into undeclared property '{action.result}'",
                    action.pos,
                )


def check_statechart(thing: ThingDef) -> list[Diagnostic]:
    """Validate one thing's statechart against its declarations."""
    sink = DiagnosticSink()
    chart = thing.statechart
    states = set(chart.states)
    base_env: Env = {p.name: p.type for p in thing.properties}

    if not chart.initial:
        sink.error("sc-initial", f"thing '{thing.name}' statechart has no initial state", chart.pos)
        return sink.sorted()

    triggerless_seen: set[str] = set()
    trigger_keys: dict[tuple[str, str, str], list[Transition]] = {}

    for t in chart.transitions:
        if t.target not in states:
            sink.error("sc-unknown-state", f"transition targets undeclared state '{t.target}'", t.pos)
        env = dict(base_env)
        if t.trigger is None:
            if t.source in triggerless_seen:
                sink.error(
                    "sc-nondeterminism",
                    f"state '{t.source}' has more than one triggerless transition",
                    t.pos,
                )
            triggerless_seen.add(t.source)
        else:
            port = thing.port(t.trigger.port)
            if port is None:
                sink.error("sc-unknown-port", f"trigger on undeclared port '{t.trigger.port}'", t.pos)
            else:
                if port.direction == "out":
                    sink.error(
                        "sc-port-direction",
                        f"port '{port.name}' is an out port, cannot receive",
                        t.pos,
                    )
                if t.trigger.message not in port.receives:
                    sink.error(
                        "sc-unknown-message",
                        f"port '{port.name}' does not receive message '{t.trigger.message}'",
                        t.pos,
                    )
            message = thing.message(t.trigger.message)
            if message is None:
                sink.error(
                    "sc-unknown-message",
                    f"trigger on undeclared message '{t.trigger.message}'",
                    t.pos,
                )
            else:
                if len(t.trigger.params) != len(message.params):
                    sink.error(
                        "sc-arity",
                        f"trigger binds {len(t.trigger.params)} parameter(s), message "
                        f"'{message.name}' has {len(message.params)}",
                        t.pos,
                    )
                for pname, (_, ptype) in zip(t.trigger.params, message.params):
                    env[pname] = ptype
            key = (t.source, t.trigger.port, t.trigger.message)
            trigger_keys.setdefault(key, []).append(t)

        if t.guard is not None:
            gtype = type_of(t.guard, env, sink)
            if gtype is not None and gtype != BOOL:
                sink.error("sc-guard-type", f"guard must be Bool, got {gtype}", t.pos)
        _check_actions(thing, t, env, sink)

    # same-trigger transitions must be pairwise distinguishable by guards
    for (source, port, message), group in trigger_keys.items():
        if len(group) < 2:
            continue
        unguarded = [t for t in group if t.guard is None]
        if len(unguarded) >= 1 and len(group) > 1:
            sink.error(
                "sc-nondeterminism",
                f"state '{source}' has {len(group)} transitions on {port}?{message}; "
                "all must carry guards",
                group[1].pos,
            )
            continue
        seen_guards: set[str] = set()
        for t in group:
            text = print_expr(t.guard)  # type: ignore[arg-type]
            if text in seen_guards:
                sink.error(
                    "sc-nondeterminism",
                    f"state '{source}' repeats guard [{text}] on {port}?{message}",
                    t.pos,
                )
            seen_guards.add(text)

    # reachability from the initial state
    reachable = {chart.initial}
    frontier = [chart.initial]
    while frontier:
        state = frontier.pop()
        for t in chart.outgoing(state):
            if t.target in states and t.target not in reachable:
                reachable.add(t.target)
                frontier.append(t.target)
    for state in chart.states:
        if state not in reachable:
            sink.warning("sc-unreachable", f"state '{state}' is unreachable from '{chart.initial}'", chart.pos)

    return sink.sorted()
