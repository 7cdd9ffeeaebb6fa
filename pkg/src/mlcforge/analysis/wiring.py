"""Pipeline wiring validation: endpoint existence, directions, payload type
equality, connected network inputs, and single-producer fan-in."""

from __future__ import annotations

from dataclasses import dataclass

from ..diagnostics import Diagnostic, DiagnosticSink
from ..frontend.printer import print_tensor
from ..model import (
    Connector,
    Instance,
    MessageDef,
    ModelUnit,
    NetworkArch,
    PipelineGraph,
    TensorType,
    expand_def_blocks,
    resolve_generics,
    ModelError,
)


@dataclass(frozen=True)
class Endpoint:
    """What a connector end carries: either messages or a tensor."""

    exists: bool
    can_send: bool = False
    can_receive: bool = False
    messages: tuple[MessageDef, ...] = ()  # things
    tensor: TensorType | None = None  # networks and stubs


def _resolve_network(unit: ModelUnit, inst: Instance, sink: DiagnosticSink) -> NetworkArch | None:
    arch = unit.network(inst.type_name or "")
    if arch is None:
        sink.error("wire-unknown-type", f"instance '{inst.name}' references unknown network '{inst.type_name}'", inst.pos)
        return None
    try:
        return expand_def_blocks(resolve_generics(arch, dict(inst.bindings)))
    except ModelError as exc:
        sink.error("wire-bindings", f"instance '{inst.name}': {exc}", inst.pos)
        return None


def _endpoint(unit: ModelUnit, inst: Instance, port: str, side: str, sink: DiagnosticSink,
              nets: dict[str, NetworkArch | None]) -> Endpoint:
    if inst.kind == "thing":
        thing = unit.thing(inst.type_name or "")
        if thing is None:
            sink.error("wire-unknown-type", f"instance '{inst.name}' references unknown thing '{inst.type_name}'", inst.pos)
            return Endpoint(False)
        pdef = thing.port(port)
        if pdef is None:
            return Endpoint(False)
        names = pdef.sends if side == "src" else pdef.receives
        messages = tuple(m for n in names for m in [thing.message(n)] if m is not None)
        return Endpoint(
            True,
            can_send=pdef.direction in ("out", "inout"),
            can_receive=pdef.direction in ("in", "inout"),
            messages=messages,
        )
    if inst.kind == "network":
        arch = nets.get(inst.name)
        if arch is None:
            return Endpoint(False)
        in_port = arch.input_port(port)
        out_port = arch.output_port(port)
        if in_port is None and out_port is None:
            return Endpoint(False)
        pdef = in_port or out_port
        return Endpoint(
            True,
            can_send=out_port is not None,
            can_receive=in_port is not None,
            tensor=pdef.tensor,  # type: ignore[union-attr]
        )
    for sport in inst.stub_ports:
        if sport.name == port:
            return Endpoint(
                True,
                can_send=sport.direction == "out",
                can_receive=sport.direction == "in",
                tensor=sport.tensor,
            )
    return Endpoint(False)


def _single_tensor_param(message: MessageDef) -> TensorType | None:
    if len(message.params) == 1 and isinstance(message.params[0][1], TensorType):
        return message.params[0][1]
    return None


def _payload_compatible(src: Endpoint, dst: Endpoint, c: Connector, sink: DiagnosticSink) -> None:
    if src.tensor is not None and dst.tensor is not None:
        if src.tensor != dst.tensor:
            sink.error(
                "wire-type",
                f"connector {c.src_instance}.{c.src_port} -> {c.dst_instance}.{c.dst_port}: "
                f"tensor {print_tensor(src.tensor)} does not match {print_tensor(dst.tensor)}",
                c.pos,
            )
        return
    if src.messages and dst.messages:
        receivable = {m.name: m for m in dst.messages}
        for sent in src.messages:
            target = receivable.get(sent.name)
            if target is None or target.params != sent.params:
                sink.error(
                    "wire-type",
                    f"connector {c.src_instance}.{c.src_port} -> {c.dst_instance}.{c.dst_port}: "
                    f"message '{sent.name}' is not receivable with matching parameters",
                    c.pos,
                )
        return
    if src.messages and dst.tensor is not None:
        for sent in src.messages:
            tensor = _single_tensor_param(sent)
            if tensor is None or tensor != dst.tensor:
                sink.error(
                    "wire-type",
                    f"connector {c.src_instance}.{c.src_port} -> {c.dst_instance}.{c.dst_port}: "
                    f"message '{sent.name}' does not carry exactly one tensor "
                    f"{print_tensor(dst.tensor)}",
                    c.pos,
                )
        return
    if src.tensor is not None and dst.messages:
        matches = [m for m in dst.messages if _single_tensor_param(m) == src.tensor]
        if len(matches) != 1:
            sink.error(
                "wire-type",
                f"connector {c.src_instance}.{c.src_port} -> {c.dst_instance}.{c.dst_port}: "
                f"receiver needs exactly one message with a single tensor parameter "
                f"{print_tensor(src.tensor)}, found {len(matches)}",
                c.pos,
            )
        return
    sink.error(
        "wire-type",
        f"connector {c.src_instance}.{c.src_port} -> {c.dst_instance}.{c.dst_port}: "
        "endpoints carry incompatible payloads",
        c.pos,
    )


def check_wiring(pipeline: PipelineGraph, unit: ModelUnit) -> list[Diagnostic]:
    """Validate one pipeline's instances and connectors."""
    sink = DiagnosticSink()
    nets: dict[str, NetworkArch | None] = {}
    for inst in pipeline.instances:
        if inst.kind == "network":
            nets[inst.name] = _resolve_network(unit, inst, sink)
        elif inst.kind == "thing" and unit.thing(inst.type_name or "") is None:
            sink.error(
                "wire-unknown-type",
                f"instance '{inst.name}' references unknown thing '{inst.type_name}'",
                inst.pos,
            )

    producers: dict[tuple[str, str], int] = {}
    for c in pipeline.connectors:
        src_inst = pipeline.instance(c.src_instance)
        dst_inst = pipeline.instance(c.dst_instance)
        if src_inst is None or dst_inst is None:
            missing = c.src_instance if src_inst is None else c.dst_instance
            sink.error("wire-dangling", f"connector references unknown instance '{missing}'", c.pos)
            continue
        src = _endpoint(unit, src_inst, c.src_port, "src", sink, nets)
        dst = _endpoint(unit, dst_inst, c.dst_port, "dst", sink, nets)
        if not src.exists:
            sink.error("wire-dangling", f"no port '{c.src_port}' on instance '{c.src_instance}'", c.pos)
            continue
        if not dst.exists:
            sink.error("wire-dangling", f"no port '{c.dst_port}' on instance '{c.dst_instance}'", c.pos)
            continue
        if not src.can_send:
            sink.error(
                "wire-direction",
                f"port '{c.src_instance}.{c.src_port}' cannot be a connector source",
                c.pos,
            )
            continue
        if not dst.can_receive:
            sink.error(
                "wire-direction",
                f"port '{c.dst_instance}.{c.dst_port}' cannot be a connector target",
                c.pos,
            )
            continue
        _payload_compatible(src, dst, c, sink)
        if dst_inst.kind in ("network", "stub"):
            key = (c.dst_instance, c.dst_port)
            producers[key] = producers.get(key, 0) + 1

    for (inst_name, port), count in sorted(producers.items()):
        if count > 1:
            sink.error(
                "wire-multiple-writers",
                f"input '{inst_name}.{port}' has {count} producers; exactly one allowed",
                pipeline.pos,
            )

    for inst in pipeline.instances:
        required: list[str] = []
        if inst.kind == "network":
            arch = nets.get(inst.name)
            if arch is not None:
                required = [p.name for p in arch.input_ports]
        elif inst.kind == "stub":
            required = [p.name for p in inst.stub_ports if p.direction == "in"]
        for port in required:
            if (inst.name, port) not in producers:
                sink.error(
                    "wire-unconnected-input",
                    f"input '{inst.name}.{port}' is not connected to any producer",
                    inst.pos,
                )

    return sink.sorted()
