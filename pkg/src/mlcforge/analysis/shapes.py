"""Layer-by-layer shape propagation for flat, concrete architectures.

Dimension convention is channel-last: rank-3 feature maps are [H, W, C] and
rank-1 vectors are [N]. Convolution and pooling require rank-3 input; with
``valid`` padding H' = floor((H - kh) / sh) + 1, with ``same`` padding
H' = ceil(H / sh). Flatten collapses any rank to the product of its dims.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from ..diagnostics import Diagnostic, DiagnosticSink
from ..model import LayerSpec, NetworkArch

#: maps an ImportPretrained archive ref to (input dims, output dims)
ImportResolver = Callable[[str], "tuple[tuple[int, ...], tuple[int, ...]] | None"]


@dataclass(frozen=True)
class ShapeAnnotation:
    """Fencepost shape list: shapes[i] feeds layer i, shapes[i+1] leaves it."""

    shapes: tuple[tuple[int, ...], ...]

    def input_of(self, index: int) -> tuple[int, ...]:
        return self.shapes[index]

    def output_of(self, index: int) -> tuple[int, ...]:
        return self.shapes[index + 1]

    @property
    def final(self) -> tuple[int, ...]:
        return self.shapes[-1]


def _pair(value) -> tuple[int, int]:
    if isinstance(value, tuple):
        return int(value[0]), int(value[1])
    return int(value), int(value)


def _window_out(size: int, window: int, stride: int, padding: str) -> int:
    if padding == "same":
        return math.ceil(size / stride)
    return (size - window) // stride + 1


def _propagate(
    layer: LayerSpec,
    index: int,
    dims: tuple[int, ...],
    sink: DiagnosticSink,
    resolver: ImportResolver | None,
) -> tuple[int, ...] | None:
    kind = layer.kind
    if kind in ("Relu", "Sigmoid", "Tanh", "Softmax", "Dropout"):
        return dims
    if kind == "Flatten":
        product = 1
        for d in dims:
            product *= d
        return (product,)
    if kind == "FullyConnected":
        if len(dims) != 1:
            sink.error(
                "shape-rank",
                f"layer {index} (FullyConnected) needs rank-1 input, got rank {len(dims)} {list(dims)}",
                layer.pos,
            )
            return None
        return (int(layer.arg("units")),)
    if kind in ("Convolution", "Pooling"):
        if len(dims) != 3:
            sink.error(
                "shape-rank",
                f"layer {index} ({kind}) needs rank-3 [H, W, C] input, got rank {len(dims)} {list(dims)}",
                layer.pos,
            )
            return None
        h, w, c = dims
        kh, kw = _pair(layer.arg("kernel" if kind == "Convolution" else "window"))
        sh, sw = _pair(layer.arg("stride", (1, 1)))
        padding = str(layer.arg("padding", "valid"))
        out_h = _window_out(h, kh, sh, padding)
        out_w = _window_out(w, kw, sw, padding)
        if out_h < 1 or out_w < 1:
            sink.error(
                "shape-mismatch",
                f"layer {index} ({kind}) window {kh}x{kw} stride {sh}x{sw} does not fit input {h}x{w}",
                layer.pos,
            )
            return None
        out_c = int(layer.arg("channels")) if kind == "Convolution" else c
        return (out_h, out_w, out_c)
    if kind == "ImportPretrained":
        ref = str(layer.arg("archive"))
        resolved = resolver(ref) if resolver is not None else None
        if resolved is None:
            sink.error("shape-unresolved-import", f"cannot resolve imported archive '{ref}'", layer.pos)
            return None
        in_dims, out_dims = resolved
        if tuple(dims) != tuple(in_dims):
            sink.error(
                "shape-mismatch",
                f"layer {index} (ImportPretrained '{ref}') expects input {list(in_dims)}, got {list(dims)}",
                layer.pos,
            )
            return None
        return tuple(out_dims)
    if kind == "Wildcard":
        sink.error("net-wildcard", f"layer {index}: wildcard layers are not supported", layer.pos)
        return None
    sink.error("shape-unknown-layer", f"layer {index}: unknown layer kind '{kind}'", layer.pos)
    return None


def infer_shapes(
    arch: NetworkArch, resolver: ImportResolver | None = None
) -> tuple[ShapeAnnotation | None, list[Diagnostic]]:
    """Propagate shapes through a generic-free, def-flat architecture.

    Returns the annotation (None when propagation broke down) and
    diagnostics. A mismatch between the final layer output and the declared
    output port is an error like any inter-layer mismatch.
    """
    sink = DiagnosticSink()
    if arch.generics:
        sink.error("shape-pre", f"arch '{arch.name}' still has generics", arch.pos)
        return None, sink.sorted()
    for elem in arch.body:
        if not isinstance(elem, LayerSpec):
            sink.error("shape-pre", f"arch '{arch.name}' still has def-block calls", arch.pos)
            return None, sink.sorted()

    in_port = arch.input_port(arch.body_input)
    out_port = arch.output_port(arch.body_output)
    if in_port is None or out_port is None:
        sink.error("shape-pre", f"arch '{arch.name}' body ports are not declared", arch.pos)
        return None, sink.sorted()

    dims = in_port.tensor.concrete_dims()
    shapes: list[tuple[int, ...]] = [dims]
    for index, layer in enumerate(arch.body):
        next_dims = _propagate(layer, index, dims, sink, resolver)  # type: ignore[arg-type]
        if next_dims is None:
            return None, sink.sorted()
        dims = next_dims
        shapes.append(dims)

    declared = out_port.tensor.concrete_dims()
    if tuple(dims) != tuple(declared):
        sink.error(
            "shape-mismatch",
            f"network output {list(dims)} does not match declared port "
            f"'{arch.body_output}' dims {list(declared)}",
            out_port.pos,
        )
        return None, sink.sorted()
    return ShapeAnnotation(tuple(shapes)), sink.sorted()
