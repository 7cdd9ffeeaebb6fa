"""Parser for the network-architecture language (`.nal`).

Concrete syntax::

    component Detector<classes> {
      ports {
        in image: Q(0:255)^{28,28,1}
        out digit: R(0:1)^{classes}
      }
      def dense(units) {
        FullyConnected(units)
        Relu
      }
      net {
        image -> Flatten -> dense(128) -> FullyConnected(classes) -> Softmax -> digit
      }
    }

Parsing recovers at `component` boundaries so several errors surface per run.
"""

from __future__ import annotations

from ..diagnostics import Diagnostic, SourcePos
from ..model import (
    LAYER_PARAMS,
    ArgValue,
    BodyElem,
    DefBlock,
    DefCall,
    GenericRef,
    LayerSpec,
    NetworkArch,
    Port,
    TensorType,
)
from .base import ParseAbort, Parser

TOP_KEYWORDS = ("component",)

#: layer parameters that accept an (h, w) pair; bare ints are expanded
_PAIR_PARAMS = {"kernel", "window", "stride"}
_ENUM_PARAMS = {"padding": ("valid", "same"), "kind": ("max", "avg")}
_DIMENSIONAL_PARAMS = {"channels", "units"}


class _NetParser(Parser):
    def __init__(self, text: str, file: str):
        super().__init__(text, file)
        self.generics: tuple[str, ...] = ()

    def parse_file(self) -> list[NetworkArch]:
        archs: list[NetworkArch] = []
        if self.at("EOF"):
            self.error_here("parse-expected", "expected 'component'")
            return archs
        while not self.at("EOF"):
            if self.at_kw("component"):
                try:
                    archs.append(self._component())
                except ParseAbort:
                    self.sync_to_top_level(TOP_KEYWORDS)
            else:
                self.error_here("parse-expected", f"expected 'component', found {self._describe()}")
                self.sync_to_top_level(TOP_KEYWORDS)
        return archs

    def _component(self) -> NetworkArch:
        start = self.expect_kw("component").pos
        name = self.expect_ident("component name").text
        generics: list[str] = []
        if self.accept("LT"):
            generics.append(self.expect_ident("generic parameter").text)
            while self.accept("COMMA"):
                generics.append(self.expect_ident("generic parameter").text)
            self.expect("GT", "'>'")
        self.generics = tuple(generics)
        self.expect("LBRACE", "'{'")

        inputs: list[Port] = []
        outputs: list[Port] = []
        defs: list[DefBlock] = []
        body_input = ""
        body: tuple[BodyElem, ...] = ()
        body_output = ""

        while not self.at("RBRACE") and not self.at("EOF"):
            if self.at_kw("ports"):
                self.advance()
                self.expect("LBRACE", "'{'")
                while not self.at("RBRACE") and not self.at("EOF"):
                    direction_tok = self.tok
                    if self.accept_kw("in"):
                        inputs.append(self._port(direction_tok.pos))
                    elif self.accept_kw("out"):
                        outputs.append(self._port(direction_tok.pos))
                    else:
                        self.error_here("parse-expected", "expected 'in' or 'out' port")
                        raise ParseAbort()
                self.expect("RBRACE", "'}' closing ports")
            elif self.at_kw("def"):
                defs.append(self._def_block())
            elif self.at_kw("net"):
                self.advance()
                self.expect("LBRACE", "'{'")
                body_input, body, body_output = self._chain()
                self.expect("RBRACE", "'}' closing net")
            else:
                self.error_here(
                    "parse-expected", f"expected 'ports', 'def' or 'net', found {self._describe()}"
                )
                raise ParseAbort()
        self.expect("RBRACE", "'}' closing component")

        arch = NetworkArch(
            name=name,
            generics=self.generics,
            input_ports=tuple(inputs),
            output_ports=tuple(outputs),
            def_blocks=tuple(defs),
            body_input=body_input,
            body=body,
            body_output=body_output,
            pos=start,
        )
        self._check_arch(arch)
        return arch

    def _port(self, pos: SourcePos) -> Port:
        name = self.expect_ident("port name").text
        self.expect("COLON", "':'")
        tensor = self._tensor_type()
        return Port(name, tensor, pos)

    def _tensor_type(self) -> TensorType:
        kind_tok = self.expect_ident("tensor kind 'Q' or 'R'")
        if kind_tok.text not in ("Q", "R"):
            self.sink.error("parse-tensor", f"tensor kind must be Q or R, got '{kind_tok.text}'", kind_tok.pos)
            raise ParseAbort()
        self.expect("LPAREN", "'('")
        lo = self._number("range lower bound")
        self.expect("COLON", "':'")
        hi = self._number("range upper bound")
        self.expect("RPAREN", "')'")
        self.expect("CARET", "'^'")
        self.expect("LBRACE", "'{'")
        dims: list[int | GenericRef] = [self._dim()]
        while self.accept("COMMA"):
            dims.append(self._dim())
        self.expect("RBRACE", "'}'")
        if lo >= hi:
            self.sink.error("parse-tensor", f"range lower bound {lo} not below upper {hi}", kind_tok.pos)
            raise ParseAbort()
        return TensorType("q" if kind_tok.text == "Q" else "r", lo, hi, tuple(dims))

    def _number(self, what: str) -> float:
        negative = bool(self.accept("MINUS"))
        tok = self.tok
        if tok.kind in ("INT", "REAL"):
            self.advance()
            value = tok.value
            return -value if negative else value  # type: ignore[operator,return-value]
        self.error_here("parse-expected", f"expected {what}")
        raise ParseAbort()

    def _dim(self) -> int | GenericRef:
        tok = self.tok
        if tok.kind == "INT":
            self.advance()
            if tok.value < 1:  # type: ignore[operator]
                self.sink.error("parse-dim", f"dimension must be >= 1, got {tok.value}", tok.pos)
                raise ParseAbort()
            return tok.value  # type: ignore[return-value]
        if tok.kind == "IDENT":
            self.advance()
            if tok.text not in self.generics:
                self.sink.error("net-unknown-generic", f"unknown generic dimension '{tok.text}'", tok.pos)
            return GenericRef(tok.text)
        self.error_here("parse-expected", "expected a dimension (integer or generic)")
        raise ParseAbort()

    def _def_block(self) -> DefBlock:
        start = self.expect_kw("def").pos
        name = self.expect_ident("def block name").text
        params: list[str] = []
        self.expect("LPAREN", "'('")
        if not self.at("RPAREN"):
            params.append(self.expect_ident("parameter").text)
            while self.accept("COMMA"):
                params.append(self.expect_ident("parameter").text)
        self.expect("RPAREN", "')'")
        self.expect("LBRACE", "'{'")
        body: list[BodyElem] = []
        while not self.at("RBRACE") and not self.at("EOF"):
            body.append(self._layer_or_call(extra_names=tuple(params)))
        self.expect("RBRACE", "'}' closing def block")
        return DefBlock(name, tuple(params), tuple(body), start)

    def _chain(self) -> tuple[str, tuple[BodyElem, ...], str]:
        first = self.expect_ident("input port name")
        elems: list[BodyElem] = []
        last_name: str | None = None
        while self.accept("ARROW"):
            if not self.at("IDENT"):
                self.error_here("parse-expected", "expected a layer or port name after '->'")
                raise ParseAbort()
            # Lookahead decides: a bare identifier closing the chain is the output port.
            if self.peek().kind in ("RBRACE", "EOF"):
                last_name = self.advance().text
                break
            elems.append(self._layer_or_call(extra_names=()))
        if last_name is None:
            self.error_here("parse-expected", "net chain must end in an output port name")
            raise ParseAbort()
        return first.text, tuple(elems), last_name

    def _layer_or_call(self, extra_names: tuple[str, ...]) -> BodyElem:
        name_tok = self.expect_ident("layer or def-block name")
        args: list[tuple[str, ArgValue]] = []
        if self.accept("LPAREN"):
            self.enter()
            if not self.at("RPAREN"):
                args.append(self._arg(extra_names))
                while self.accept("COMMA"):
                    args.append(self._arg(extra_names))
            self.expect("RPAREN", "')'")
            self.leave()
        if name_tok.text in LAYER_PARAMS:
            layer = self._normalize_layer(name_tok.text, args, name_tok.pos)
            if layer.kind == "Wildcard":
                self.sink.error(
                    "net-wildcard",
                    "wildcard layers are not supported; specify the architecture explicitly",
                    name_tok.pos,
                )
            return layer
        return DefCall(name_tok.text, tuple(args), name_tok.pos)

    def _arg(self, extra_names: tuple[str, ...]) -> tuple[str, ArgValue]:
        key = ""
        if self.at("IDENT") and self.peek().kind == "EQUALS":
            key = self.advance().text
            self.advance()
        return key, self._arg_value(extra_names)

    def _arg_value(self, extra_names: tuple[str, ...]) -> ArgValue:
        tok = self.tok
        if tok.kind == "LPAREN":
            self.enter()
            self.advance()
            first = self._arg_value(extra_names)
            self.expect("COMMA", "',' in pair")
            second = self._arg_value(extra_names)
            self.expect("RPAREN", "')'")
            self.leave()
            return (first, second)
        if tok.kind == "INT" or tok.kind == "REAL":
            self.advance()
            return tok.value  # type: ignore[return-value]
        if tok.kind == "MINUS":
            self.advance()
            num = self.tok
            if num.kind in ("INT", "REAL"):
                self.advance()
                return -num.value  # type: ignore[operator]
            self.error_here("parse-expected", "expected a number after '-'")
            raise ParseAbort()
        if tok.kind == "STRING":
            self.advance()
            return tok.value  # type: ignore[return-value]
        if tok.kind == "IDENT":
            self.advance()
            if tok.text in ("true", "false"):
                return tok.text == "true"
            if tok.text in self.generics or tok.text in extra_names:
                return GenericRef(tok.text)
            return tok.text  # enum-like argument (valid, same, max, ...)
        self.error_here("parse-expected", f"expected an argument value, found {self._describe()}")
        raise ParseAbort()

    def _normalize_layer(
        self, kind: str, raw: list[tuple[str, ArgValue]], pos: SourcePos
    ) -> LayerSpec:
        """Map positional args onto canonical names and sanity-check values."""
        param_names = LAYER_PARAMS[kind]
        named: dict[str, ArgValue] = {}
        position = 0
        for key, value in raw:
            if key:
                if key not in param_names:
                    self.sink.error("net-layer-arg", f"{kind} has no parameter '{key}'", pos)
                    continue
                if key in named:
                    self.sink.error("net-layer-arg", f"duplicate argument '{key}' for {kind}", pos)
                    continue
                named[key] = value
            else:
                if position >= len(param_names):
                    self.sink.error("net-layer-arg", f"too many arguments for {kind}", pos)
                    continue
                while position < len(param_names) and param_names[position] in named:
                    position += 1
                if position >= len(param_names):
                    self.sink.error("net-layer-arg", f"too many arguments for {kind}", pos)
                    continue
                named[param_names[position]] = value
                position += 1

        args: list[tuple[str, ArgValue]] = []
        for name in param_names:
            if name not in named:
                continue
            value = named[name]
            if name in _PAIR_PARAMS and not isinstance(value, tuple):
                value = (value, value)
            if name in _ENUM_PARAMS:
                allowed = _ENUM_PARAMS[name]
                if not (isinstance(value, str) and value in allowed):
                    self.sink.error(
                        "net-layer-arg",
                        f"{kind} {name} must be one of {allowed}, got {value!r}",
                        pos,
                    )
                    continue
            if name in _DIMENSIONAL_PARAMS and isinstance(value, int) and value < 1:
                self.sink.error("net-layer-arg", f"{kind} {name} must be >= 1", pos)
                continue
            if name in _PAIR_PARAMS and isinstance(value, tuple):
                for item in value:
                    if isinstance(item, int) and item < 1:
                        self.sink.error("net-layer-arg", f"{kind} {name} components must be >= 1", pos)
            if name == "rate" and isinstance(value, (int, float)) and not 0 <= float(value) <= 1:
                self.sink.error("net-layer-arg", f"Dropout rate must be within [0, 1], got {value}", pos)
                continue
            args.append((name, value))

        required = {
            "Convolution": ("kernel", "channels"),
            "Pooling": ("kind", "window", "stride"),
            "FullyConnected": ("units",),
            "Dropout": ("rate",),
            "ImportPretrained": ("archive",),
        }.get(kind, ())
        present = {k for k, _ in args}
        for req in required:
            if req not in present:
                self.sink.error("net-layer-arg", f"{kind} requires argument '{req}'", pos)
        return LayerSpec(kind, tuple(args), pos)

    def _check_arch(self, arch: NetworkArch) -> None:
        names = [p.name for p in arch.input_ports] + [p.name for p in arch.output_ports]
        seen: set[str] = set()
        for name in names:
            if name in seen:
                self.sink.error("net-duplicate-port", f"duplicate port name '{name}'", arch.pos)
            seen.add(name)
        if not arch.input_ports or not arch.output_ports:
            self.sink.error("net-ports", f"component '{arch.name}' needs at least one in and one out port", arch.pos)
        def_names: set[str] = set()
        for block in arch.def_blocks:
            if block.name in def_names:
                self.sink.error("net-duplicate-def", f"duplicate def block '{block.name}'", block.pos)
            def_names.add(block.name)
            if block.name in LAYER_PARAMS:
                self.sink.error("net-def-shadows", f"def block '{block.name}' shadows a library layer", block.pos)
        if arch.body_input and arch.input_port(arch.body_input) is None:
            self.sink.error(
                "net-body-port",
                f"net chain starts at '{arch.body_input}', which is not a declared input port",
                arch.pos,
            )
        if arch.body_output and arch.output_port(arch.body_output) is None:
            self.sink.error(
                "net-body-port",
                f"net chain ends at '{arch.body_output}', which is not a declared output port",
                arch.pos,
            )
        if not arch.body_input:
            self.sink.error("net-missing-net", f"component '{arch.name}' has no net block", arch.pos)


def parse_network(text: str, file: str) -> tuple[list[NetworkArch], list[Diagnostic]]:
    """Parse a `.nal` file. Returns every successfully parsed component plus
    diagnostics; an empty list with errors means nothing was salvageable."""
    parser = _NetParser(text, file)
    try:
        archs = parser.parse_file()
    except ParseAbort:
        archs = []
    return archs, parser.sink.sorted()
