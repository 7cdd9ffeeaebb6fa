"""Canonical pretty-printer for every AST node.

Printing is the toolchain's canonicalization step: digests and golden files
are computed over printed text, and ``parse(print(parse(s)))`` equals
``parse(s)`` structurally for every valid source. Output always uses LF.
"""

from __future__ import annotations

from ..model import (
    Action,
    AssignAction,
    Binary,
    ConfigTree,
    ConfigValue,
    Connector,
    DaPredict,
    DaPreprocess,
    DaTrain,
    DefBlock,
    DefCall,
    EnumToken,
    Expr,
    GenericRef,
    Instance,
    LayerSpec,
    Lit,
    MLBlock,
    MessageDef,
    ModelUnit,
    Name,
    NamedConfig,
    NetworkArch,
    PipelineGraph,
    Port,
    PortDef,
    PropertyDef,
    ScalarType,
    SendAction,
    StateMachine,
    TensorType,
    ThingDef,
    Transition,
    Unary,
)

_INDENT = "  "


def fmt_number(value: float | int) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    # keep realness visible so ints and reals round-trip distinctly
    if float(value).is_integer() and abs(value) < 1e15:
        return f"{value:.1f}"
    return repr(float(value))


def fmt_string(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{escaped}"'


# ---------------------------------------------------------------------------
# tensors, types
# ---------------------------------------------------------------------------

def print_tensor(t: TensorType) -> str:
    kind = "Q" if t.kind == "q" else "R"
    dims = ",".join(str(d) for d in t.dims)
    return f"{kind}({fmt_number(t.lo)}:{fmt_number(t.hi)})^{{{dims}}}"


def print_value_type(t) -> str:
    if isinstance(t, ScalarType):
        return str(t)
    return print_tensor(t)


# ---------------------------------------------------------------------------
# config trees
# ---------------------------------------------------------------------------

def _print_scalar(value: ConfigValue) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return fmt_number(value)
    if isinstance(value, EnumToken):
        return value.value
    if isinstance(value, str):
        return fmt_string(value)
    raise TypeError(f"not a scalar: {value!r}")


def print_config_tree(tree: ConfigTree, indent: int = 0) -> str:
    """Multiline canonical form used for `.tcl` files and digests."""
    lines: list[str] = []
    pad = _INDENT * indent
    for key, value in tree.entries:
        if isinstance(value, ConfigTree):
            lines.append(f"{pad}{key} {{")
            inner = print_config_tree(value, indent + 1)
            if inner:
                lines.append(inner)
            lines.append(f"{pad}}}")
        elif isinstance(value, tuple):
            items = ", ".join(_print_scalar(v) for v in value)
            lines.append(f"{pad}{key}: ({items})")
        else:
            lines.append(f"{pad}{key}: {_print_scalar(value)}")
    return "\n".join(lines)


def print_config_inline(tree: ConfigTree) -> str:
    """Single-line `{k: v ...}` form used for bridge payloads and traces."""
    parts: list[str] = []
    for key, value in tree.entries:
        if isinstance(value, ConfigTree):
            parts.append(f"{key} {print_config_inline(value)}")
        elif isinstance(value, tuple):
            items = ", ".join(_print_scalar(v) for v in value)
            parts.append(f"{key}: ({items})")
        else:
            parts.append(f"{key}: {_print_scalar(value)}")
    return "{" + " ".join(parts) + "}"


# ---------------------------------------------------------------------------
# networks
# ---------------------------------------------------------------------------

def _print_arg_value(value) -> str:
    if isinstance(value, GenericRef):
        return value.name
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return fmt_number(value)
    if isinstance(value, tuple):
        return "(" + ", ".join(_print_arg_value(v) for v in value) + ")"
    if isinstance(value, str):
        # enum-like arguments print bare; anything else quoted
        if value.isidentifier():
            return value
        return fmt_string(value)
    raise TypeError(f"bad layer argument: {value!r}")


def print_layer(elem) -> str:
    if isinstance(elem, LayerSpec):
        if not elem.args:
            return elem.kind
        args = ", ".join(f"{k}={_print_arg_value(v)}" for k, v in elem.args)
        return f"{elem.kind}({args})"
    if isinstance(elem, DefCall):
        args = ", ".join(
            (f"{k}={_print_arg_value(v)}" if k else _print_arg_value(v)) for k, v in elem.args
        )
        return f"{elem.name}({args})" if elem.args else f"{elem.name}()"
    raise TypeError(f"not a body element: {elem!r}")


def print_network(arch: NetworkArch) -> str:
    lines: list[str] = []
    generics = f"<{', '.join(arch.generics)}>" if arch.generics else ""
    lines.append(f"component {arch.name}{generics} {{")
    lines.append(f"{_INDENT}ports {{")
    for port in arch.input_ports:
        lines.append(f"{_INDENT * 2}in {port.name}: {print_tensor(port.tensor)}")
    for port in arch.output_ports:
        lines.append(f"{_INDENT * 2}out {port.name}: {print_tensor(port.tensor)}")
    lines.append(f"{_INDENT}}}")
    for block in arch.def_blocks:
        lines.append(f"{_INDENT}def {block.name}({', '.join(block.params)}) {{")
        for elem in block.body:
            lines.append(f"{_INDENT * 2}{print_layer(elem)}")
        lines.append(f"{_INDENT}}}")
    chain = " -> ".join([arch.body_input, *[print_layer(e) for e in arch.body], arch.body_output])
    lines.append(f"{_INDENT}net {{")
    lines.append(f"{_INDENT * 2}{chain}")
    lines.append(f"{_INDENT}}}")
    lines.append("}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# expressions and actions
# ---------------------------------------------------------------------------

_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
    "+": 4, "-": 4,
    "*": 5, "/": 5,
}
_UNARY_PREC = 6


def print_expr(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Lit):
        value = expr.value
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, (int, float)):
            return fmt_number(value)
        return fmt_string(value)
    if isinstance(expr, Name):
        return expr.id
    if isinstance(expr, Unary):
        inner = print_expr(expr.operand, _UNARY_PREC)
        text = f"{expr.op}{inner}"
        return f"({text})" if parent_prec > _UNARY_PREC else text
    if isinstance(expr, Binary):
        prec = _PREC[expr.op]
        left = print_expr(expr.left, prec)
        right = print_expr(expr.right, prec + 1)
        text = f"{left} {expr.op} {right}"
        return f"({text})" if parent_prec > prec else text
    raise TypeError(f"not an expression: {expr!r}")


def print_action(action: Action) -> str:
    if isinstance(action, DaPreprocess):
        return "da_preprocess"
    if isinstance(action, DaTrain):
        return "da_train"
    if isinstance(action, DaPredict):
        features = ", ".join(print_expr(f) for f in action.features)
        return f"da_predict({features} -> {action.result})"
    if isinstance(action, SendAction):
        args = ", ".join(print_expr(a) for a in action.args)
        return f"{action.port}!{action.message}({args})"
    if isinstance(action, AssignAction):
        return f"{action.prop} := {print_expr(action.expr)}"
    raise TypeError(f"not an action: {action!r}")


def print_transition(t: Transition) -> str:
    parts: list[str] = []
    if t.trigger is not None:
        params = ", ".join(t.trigger.params)
        parts.append(f"on {t.trigger.port}?{t.trigger.message}({params})")
    if t.guard is not None:
        parts.append(f"[{print_expr(t.guard)}]")
    if t.actions:
        parts.append("/ " + "; ".join(print_action(a) for a in t.actions))
    parts.append(f"-> {t.target}")
    return " ".join(parts)


def print_statechart(chart: StateMachine, indent: int = 0) -> str:
    pad = _INDENT * indent
    if not chart.states and not chart.initial:
        return f"{pad}statechart {{ }}"
    lines = [f"{pad}statechart {{"]
    if chart.initial:
        lines.append(f"{pad}{_INDENT}initial {chart.initial}")
    for state in chart.states:
        outgoing = chart.outgoing(state)
        if not outgoing:
            lines.append(f"{pad}{_INDENT}state {state} {{ }}")
            continue
        lines.append(f"{pad}{_INDENT}state {state} {{")
        for t in outgoing:
            lines.append(f"{pad}{_INDENT * 2}{print_transition(t)}")
        lines.append(f"{pad}{_INDENT}}}")
    lines.append(f"{pad}}}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# things and pipelines
# ---------------------------------------------------------------------------

def print_ml_block(block: MLBlock, indent: int = 0) -> str:
    pad = _INDENT * indent
    lines = [f"{pad}ml {{"]
    inner = pad + _INDENT
    if block.features:
        lines.append(f"{inner}features {' '.join(block.features)}")
    if block.labels_mode == "OFF":
        lines.append(f"{inner}labels OFF")
    else:
        lines.append(f"{inner}labels {block.labels_mode} {block.label_name}")
    lines.append(f"{inner}dataset {fmt_string(block.dataset_path)}")
    lines.append(f"{inner}model_algorithm {block.algorithm} {{")
    tree_text = print_config_tree(block.hyperparams, indent + 2)
    if tree_text:
        lines.append(tree_text)
    lines.append(f"{inner}}}")
    lines.append(f"{inner}backend {block.backend}")
    if block.prediction_results is not None:
        lines.append(f"{inner}prediction_results {fmt_string(block.prediction_results)}")
    if block.training_results is not None:
        lines.append(f"{inner}training_results {fmt_string(block.training_results)}")
    lines.append(f"{pad}}}")
    return "\n".join(lines)


def print_thing(thing: ThingDef) -> str:
    lines = [f"thing {thing.name} {{"]
    for m in thing.messages:
        params = ", ".join(f"{n}: {print_value_type(t)}" for n, t in m.params)
        lines.append(f"{_INDENT}message {m.name}({params})")
    for p in thing.ports:
        text = f"{_INDENT}port {p.direction} {p.name}"
        if p.receives:
            text += " receives " + " ".join(p.receives)
        if p.sends:
            text += " sends " + " ".join(p.sends)
        lines.append(text)
    for prop in thing.properties:
        text = f"{_INDENT}property {prop.name}: {print_value_type(prop.type)}"
        if prop.init is not None:
            if isinstance(prop.init, bool):
                text += " = " + ("true" if prop.init else "false")
            elif isinstance(prop.init, str):
                text += f" = {fmt_string(prop.init)}"
            else:
                text += f" = {fmt_number(prop.init)}"
        lines.append(text)
    if thing.ml_block is not None:
        lines.append(print_ml_block(thing.ml_block, 1))
    lines.append(print_statechart(thing.statechart, 1))
    lines.append("}")
    return "\n".join(lines)


def print_pipeline(pipe: PipelineGraph) -> str:
    lines = [f"pipeline {pipe.name} {{"]
    for inst in pipe.instances:
        if inst.kind == "thing":
            lines.append(f"{_INDENT}instance {inst.name}: thing {inst.type_name}")
        elif inst.kind == "network":
            binds = ", ".join(f"{k} = {v}" for k, v in inst.bindings)
            suffix = f"({binds})" if inst.bindings else ""
            lines.append(f"{_INDENT}instance {inst.name}: network {inst.type_name}{suffix}")
        else:
            lines.append(f"{_INDENT}instance {inst.name}: stub {{")
            for port in inst.stub_ports:
                lines.append(f"{_INDENT * 2}{port.direction} {port.name}: {print_tensor(port.tensor)}")
            lines.append(f"{_INDENT}}}")
    for c in pipe.connectors:
        lines.append(f"{_INDENT}connect {c.src_instance}.{c.src_port} -> {c.dst_instance}.{c.dst_port}")
    lines.append("}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def pretty_print(node) -> str:
    """Canonical text for any AST node or a whole ModelUnit."""
    if isinstance(node, ModelUnit):
        sections: list[str] = []
        for arch in sorted(node.networks, key=lambda a: a.name):
            sections.append(print_network(arch))
        for config in sorted(node.configs, key=lambda c: c.name):
            sections.append(f"// config {config.name}\n{print_config_tree(config.tree)}")
        for thing in sorted(node.things, key=lambda t: t.name):
            sections.append(print_thing(thing))
        for pipe in sorted(node.pipelines, key=lambda p: p.name):
            sections.append(print_pipeline(pipe))
        return "\n\n".join(sections) + "\n"
    if isinstance(node, NetworkArch):
        return print_network(node)
    if isinstance(node, NamedConfig):
        return print_config_tree(node.tree)
    if isinstance(node, ConfigTree):
        return print_config_tree(node)
    if isinstance(node, ThingDef):
        return print_thing(node)
    if isinstance(node, PipelineGraph):
        return print_pipeline(node)
    if isinstance(node, StateMachine):
        return print_statechart(node)
    if isinstance(node, MLBlock):
        return print_ml_block(node)
    if isinstance(node, TensorType):
        return print_tensor(node)
    if isinstance(node, (LayerSpec, DefCall)):
        return print_layer(node)
    if isinstance(node, Transition):
        return print_transition(node)
    if isinstance(node, Expr):
        return print_expr(node)
    if isinstance(node, Action):
        return print_action(node)
    raise TypeError(f"cannot pretty-print {type(node).__name__}")
