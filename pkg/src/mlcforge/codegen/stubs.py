"""Interface skeletons for handcrafted pipeline components.

Each stub instance becomes a class with one typed handler per input port and
one typed emit function per output port; handler bodies throw NotImplemented
until the practitioner fills them in.
"""

from __future__ import annotations

from ..frontend.printer import print_tensor
from ..model import Instance, PipelineGraph
from .fileset import GeneratedFileSet, sanitize_identifier, text_file
from . import header_comment


def _stub_module(inst: Instance) -> str:
    ident, renamed = sanitize_identifier(inst.name)
    class_name = ident[:1].upper() + ident[1:] + "Stub"
    lines = [header_comment()]
    lines.append(f"// interface skeleton for pipeline component '{inst.name}'")
    if renamed:
        lines.append(f"// identifier mapping: '{inst.name}' -> '{ident}'")
    lines.append("")
    lines.append(f"export class {class_name} {{")
    lines.append("  constructor(runtime) {")
    lines.append("    this.runtime = runtime;")
    lines.append("  }")
    for port in inst.stub_ports:
        pident, prenamed = sanitize_identifier(port.name)
        mapping = f" (port '{port.name}')" if prenamed else ""
        if port.direction == "in":
            lines.append("")
            lines.append(f"  // input '{port.name}': tensor {print_tensor(port.tensor)}{mapping}")
            lines.append(f"  on_{pident}(value) {{")
            lines.append(f"    // TODO: handle input '{port.name}'")
            lines.append(f'    throw new Error("NotImplemented: {inst.name}.on_{pident}");')
            lines.append("  }")
        else:
            lines.append("")
            lines.append(f"  // output '{port.name}': tensor {print_tensor(port.tensor)}{mapping}")
            lines.append(f"  emit_{pident}(value) {{")
            lines.append(f'    this.runtime.emit("{inst.name}", "{port.name}", value);')
            lines.append("  }")
    lines.append("}")
    lines.append("")
    return "\n".join(lines)


def generate_component_stubs(pipeline: PipelineGraph) -> GeneratedFileSet:
    """Emit one skeleton module per stub instance; empty set when none."""
    files = []
    for inst in pipeline.instances:
        if inst.kind != "stub":
            continue
        files.append(
            text_file(f"gen/stubs/{inst.name}/{inst.name}_stub.mjs", _stub_module(inst), "stub-interface")
        )
    return GeneratedFileSet(tuple(files))
