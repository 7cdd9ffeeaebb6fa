"""Parser for the system-composition language (`.scl`).

A file declares things (ports, messages, properties, optional ML block, one
statechart) and pipelines (instances plus connectors). Transition syntax::

    on <port>?<msg>(params) [guard] / <action>; <action> -> <target>

Send actions are written ``port!msg(args)``; the ML actions are
``da_preprocess``, ``da_train`` and ``da_predict(features -> result)``.
"""

from __future__ import annotations

from ..diagnostics import Diagnostic, SourcePos
from ..model import (
    BOOL,
    INT,
    REAL,
    STRING,
    Action,
    AssignAction,
    Binary,
    ConfigTree,
    Connector,
    DaPredict,
    DaPreprocess,
    DaTrain,
    Expr,
    GenericRef,
    Instance,
    Lit,
    MLBlock,
    MessageDef,
    Name,
    PipelineGraph,
    PortDef,
    PropertyDef,
    Receive,
    SendAction,
    StateMachine,
    StubPort,
    TensorType,
    ThingDef,
    Transition,
    Unary,
    ValueType,
)
from .base import ParseAbort, Parser
from .conflang import parse_entries_from_tokens

TOP_KEYWORDS = ("thing", "pipeline")
_THING_ITEM_KEYWORDS = ("message", "port", "property", "ml", "statechart")

_SCALAR_TYPES = {"Int": INT, "Real": REAL, "Bool": BOOL, "Str": STRING}


class _SysParser(Parser):
    def parse_file(self) -> tuple[list[ThingDef], list[PipelineGraph]]:
        things: list[ThingDef] = []
        pipelines: list[PipelineGraph] = []
        while not self.at("EOF"):
            if self.at_kw("thing"):
                try:
                    things.append(self._thing())
                except ParseAbort:
                    self.sync_to_top_level(TOP_KEYWORDS)
            elif self.at_kw("pipeline"):
                try:
                    pipelines.append(self._pipeline())
                except ParseAbort:
                    self.sync_to_top_level(TOP_KEYWORDS)
            else:
                self.error_here(
                    "parse-expected", f"expected 'thing' or 'pipeline', found {self._describe()}"
                )
                self.sync_to_top_level(TOP_KEYWORDS)
        return things, pipelines

    # ------------------------------------------------------------------
    # things
    # ------------------------------------------------------------------

    def _thing(self) -> ThingDef:
        start = self.expect_kw("thing").pos
        name = self.expect_ident("thing name").text
        self.expect("LBRACE", "'{'")
        messages: list[MessageDef] = []
        ports: list[PortDef] = []
        properties: list[PropertyDef] = []
        ml_block: MLBlock | None = None
        statechart: StateMachine | None = None

        while not self.at("RBRACE") and not self.at("EOF"):
            try:
                if self.at_kw("message"):
                    messages.append(self._message())
                elif self.at_kw("port"):
                    ports.append(self._port())
                elif self.at_kw("property"):
                    properties.append(self._property())
                elif self.at_kw("ml"):
                    block = self._ml_block()
                    if ml_block is not None:
                        self.sink.error("sys-duplicate-ml", f"thing '{name}' has more than one ml block", block.pos)
                    else:
                        ml_block = block
                elif self.at_kw("statechart"):
                    chart = self._statechart()
                    if statechart is not None:
                        self.sink.error(
                            "sc-duplicate-chart", f"thing '{name}' has more than one statechart", chart.pos
                        )
                    else:
                        statechart = chart
                else:
                    self.error_here(
                        "parse-expected",
                        f"expected one of {', '.join(_THING_ITEM_KEYWORDS)}, found {self._describe()}",
                    )
                    raise ParseAbort()
            except ParseAbort:
                self.skip_balanced_until("IDENT", "RBRACE")
                if self.at("IDENT") and self.tok.text not in _THING_ITEM_KEYWORDS:
                    self.advance()
        self.expect("RBRACE", "'}' closing thing")

        if statechart is None:
            self.sink.error("sc-missing", f"thing '{name}' must declare a statechart", start)
            statechart = StateMachine("", (), (), start)
        self._check_thing_names(name, messages, ports, properties)
        return ThingDef(name, tuple(messages), tuple(ports), tuple(properties), ml_block, statechart, start)

    def _check_thing_names(self, thing, messages, ports, properties) -> None:
        for group, label in ((messages, "message"), (ports, "port"), (properties, "property")):
            seen: dict[str, SourcePos] = {}
            for item in group:
                if item.name in seen:
                    self.sink.error(
                        f"sys-duplicate-{label}",
                        f"duplicate {label} '{item.name}' in thing '{thing}'",
                        item.pos,
                        related=(seen[item.name],),
                    )
                seen[item.name] = item.pos

    def _message(self) -> MessageDef:
        start = self.expect_kw("message").pos
        name = self.expect_ident("message name").text
        params: list[tuple[str, ValueType]] = []
        self.expect("LPAREN", "'('")
        if not self.at("RPAREN"):
            params.append(self._typed_param())
            while self.accept("COMMA"):
                params.append(self._typed_param())
        self.expect("RPAREN", "')'")
        return MessageDef(name, tuple(params), start)

    def _typed_param(self) -> tuple[str, ValueType]:
        name = self.expect_ident("parameter name").text
        self.expect("COLON", "':'")
        return name, self._value_type()

    def _value_type(self) -> ValueType:
        tok = self.tok
        if tok.kind == "IDENT" and tok.text in _SCALAR_TYPES:
            self.advance()
            return _SCALAR_TYPES[tok.text]
        if tok.kind == "IDENT" and tok.text in ("Q", "R"):
            return self._tensor_type()
        self.error_here("parse-expected", "expected a type (Int, Real, Bool, Str, or tensor)")
        raise ParseAbort()

    def _tensor_type(self) -> TensorType:
        kind_tok = self.expect_ident("tensor kind")
        self.expect("LPAREN", "'('")
        lo = self._number("range lower bound")
        self.expect("COLON", "':'")
        hi = self._number("range upper bound")
        self.expect("RPAREN", "')'")
        self.expect("CARET", "'^'")
        self.expect("LBRACE", "'{'")
        dims: list[int | GenericRef] = [self._int_dim()]
        while self.accept("COMMA"):
            dims.append(self._int_dim())
        self.expect("RBRACE", "'}'")
        if lo >= hi:
            self.sink.error("parse-tensor", f"range lower bound {lo} not below upper {hi}", kind_tok.pos)
            raise ParseAbort()
        return TensorType("q" if kind_tok.text == "Q" else "r", lo, hi, tuple(dims))

    def _int_dim(self) -> int:
        tok = self.tok
        if tok.kind == "INT" and tok.value >= 1:  # type: ignore[operator]
            self.advance()
            return tok.value  # type: ignore[return-value]
        self.error_here("parse-dim", "tensor dimensions here must be positive integers")
        raise ParseAbort()

    def _number(self, what: str) -> float:
        negative = bool(self.accept("MINUS"))
        tok = self.tok
        if tok.kind in ("INT", "REAL"):
            self.advance()
            return -tok.value if negative else tok.value  # type: ignore[operator,return-value]
        self.error_here("parse-expected", f"expected {what}")
        raise ParseAbort()

    def _port(self) -> PortDef:
        start = self.expect_kw("port").pos
        direction_tok = self.tok
        if direction_tok.kind == "IDENT" and direction_tok.text in ("in", "out", "inout"):
            self.advance()
        else:
            self.error_here("parse-expected", "expected port direction in/out/inout")
            raise ParseAbort()
        name = self.expect_ident("port name").text
        receives: list[str] = []
        sends: list[str] = []
        while self.at_kw("receives") or self.at_kw("sends"):
            which = self.advance().text
            bucket = receives if which == "receives" else sends
            bucket.append(self.expect_ident("message name").text)
            while self.at("IDENT") and self.tok.text not in ("receives", "sends") and self.peek().kind != "COLON":
                # message list continues until the next port-level keyword
                if self.tok.text in _THING_ITEM_KEYWORDS:
                    break
                bucket.append(self.advance().text)
        direction = direction_tok.text
        if direction == "in" and sends:
            self.sink.error("sys-port-direction", f"in port '{name}' cannot send", start)
        if direction == "out" and receives:
            self.sink.error("sys-port-direction", f"out port '{name}' cannot receive", start)
        return PortDef(name, direction, tuple(receives), tuple(sends), start)

    def _property(self) -> PropertyDef:
        start = self.expect_kw("property").pos
        name = self.expect_ident("property name").text
        self.expect("COLON", "':'")
        vtype = self._value_type()
        init = None
        if self.accept("EQUALS"):
            init = self._literal()
        return PropertyDef(name, vtype, init, start)

    def _literal(self):
        tok = self.tok
        if tok.kind == "MINUS":
            self.advance()
            num = self.tok
            if num.kind in ("INT", "REAL"):
                self.advance()
                return -num.value  # type: ignore[operator]
            self.error_here("parse-expected", "expected a number after '-'")
            raise ParseAbort()
        if tok.kind in ("INT", "REAL", "STRING"):
            self.advance()
            return tok.value
        if tok.kind == "IDENT" and tok.text in ("true", "false"):
            self.advance()
            return tok.text == "true"
        self.error_here("parse-expected", "expected a literal initializer")
        raise ParseAbort()

    # ------------------------------------------------------------------
    # ML block
    # ------------------------------------------------------------------

    def _ml_block(self) -> MLBlock:
        start = self.expect_kw("ml").pos
        self.expect("LBRACE", "'{'")
        features: list[str] = []
        labels_mode = "OFF"
        label_name: str | None = None
        dataset = ""
        algorithm = ""
        hyper = ConfigTree((), start)
        backend = "reference"
        prediction_results: str | None = None
        training_results: str | None = None
        seen: set[str] = set()

        while not self.at("RBRACE") and not self.at("EOF"):
            key_tok = self.expect_ident("an ml-block key")
            key = key_tok.text
            if key in seen:
                self.sink.error("sys-duplicate-key", f"duplicate ml-block key '{key}'", key_tok.pos)
            seen.add(key)
            if key == "features":
                while self.at("IDENT") and self.tok.text not in (
                    "features", "labels", "dataset", "model_algorithm",
                    "backend", "prediction_results", "training_results",
                ):
                    features.append(self.advance().text)
                if not features:
                    self.sink.error("sys-ml", "features list must not be empty", key_tok.pos)
            elif key == "labels":
                mode_tok = self.expect_ident("label mode ON/OFF/SEMI")
                if mode_tok.text not in ("ON", "OFF", "SEMI"):
                    self.sink.error("sys-ml", f"label mode must be ON, OFF or SEMI, got '{mode_tok.text}'", mode_tok.pos)
                labels_mode = mode_tok.text
                if labels_mode in ("ON", "SEMI"):
                    label_name = self.expect_ident("label column name").text
            elif key == "dataset":
                dataset = self.expect("STRING", "a dataset path string").text
            elif key == "model_algorithm":
                algorithm = self.expect_ident("algorithm name").text
                hyper = self._inline_tree()
            elif key == "backend":
                backend = self.expect_ident("backend id").text
            elif key == "prediction_results":
                prediction_results = self.expect("STRING", "a path string").text
            elif key == "training_results":
                training_results = self.expect("STRING", "a path string").text
            else:
                self.sink.error("sys-ml", f"unknown ml-block key '{key}'", key_tok.pos)
                raise ParseAbort()

        self.expect("RBRACE", "'}' closing ml block")
        if not dataset:
            self.sink.error("sys-ml", "ml block requires a dataset path", start)
        if not algorithm:
            self.sink.error("sys-ml", "ml block requires a model_algorithm", start)
        return MLBlock(
            tuple(features), labels_mode, label_name, dataset, algorithm, hyper,
            backend, prediction_results, training_results, start,
        )

    def _inline_tree(self) -> ConfigTree:
        """Delegate the hyperparameter block to the config-language parser."""
        open_tok = self.expect("LBRACE", "'{'")
        depth = 1
        start_index = self.index
        while depth > 0 and not self.at("EOF"):
            if self.at("LBRACE"):
                depth += 1
            elif self.at("RBRACE"):
                depth -= 1
                if depth == 0:
                    break
            self.advance()
        end_index = self.index
        self.expect("RBRACE", "'}' closing hyperparameters")
        slice_tokens = self.tokens[start_index:end_index] + [self.tokens[-1]]
        tree = parse_entries_from_tokens(slice_tokens, self.file, self.sink)
        return ConfigTree(tree.entries, open_tok.pos)

    # ------------------------------------------------------------------
    # statecharts
    # ------------------------------------------------------------------

    def _statechart(self) -> StateMachine:
        start = self.expect_kw("statechart").pos
        self.expect("LBRACE", "'{'")
        initial = ""
        if self.at_kw("initial"):
            self.advance()
            initial = self.expect_ident("initial state name").text
        elif not self.at("RBRACE"):
            self.sink.error("sc-initial", "statechart must start with 'initial <state>'", self.tok.pos)
        states: list[str] = []
        state_pos: dict[str, SourcePos] = {}
        transitions: list[Transition] = []
        while not self.at("RBRACE") and not self.at("EOF"):
            state_tok = self.expect_kw("state")
            name_tok = self.expect_ident("state name")
            if name_tok.text in state_pos:
                self.sink.error(
                    "sc-duplicate-state",
                    f"duplicate state '{name_tok.text}'",
                    name_tok.pos,
                    related=(state_pos[name_tok.text],),
                )
            else:
                state_pos[name_tok.text] = name_tok.pos
                states.append(name_tok.text)
            self.expect("LBRACE", "'{'")
            while not self.at("RBRACE") and not self.at("EOF"):
                transitions.append(self._transition(name_tok.text))
            self.expect("RBRACE", "'}' closing state")
        self.expect("RBRACE", "'}' closing statechart")
        if initial == "" and states:
            self.sink.error("sc-initial", "statechart has states but no initial state", start)
        if initial and initial not in state_pos:
            self.sink.error("sc-initial", f"initial state '{initial}' is not declared", start)
        return StateMachine(initial, tuple(states), tuple(transitions), start)

    def _transition(self, source: str) -> Transition:
        pos = self.tok.pos
        trigger: Receive | None = None
        guard: Expr | None = None
        actions: tuple[Action, ...] = ()
        if self.at_kw("on"):
            self.advance()
            port = self.expect_ident("port name").text
            self.expect("QUESTION", "'?'")
            message = self.expect_ident("message name").text
            params: list[str] = []
            self.expect("LPAREN", "'('")
            if not self.at("RPAREN"):
                params.append(self.expect_ident("parameter name").text)
                while self.accept("COMMA"):
                    params.append(self.expect_ident("parameter name").text)
            self.expect("RPAREN", "')'")
            trigger = Receive(port, message, tuple(params), pos)
        if self.accept("LBRACKET"):
            guard = self._expr()
            self.expect("RBRACKET", "']' closing guard")
        if self.accept("SLASH"):
            acts = [self._action()]
            while self.accept("SEMI"):
                acts.append(self._action())
            actions = tuple(acts)
        self.expect("ARROW", "'->' before target state")
        target = self.expect_ident("target state name").text
        return Transition(source, target, trigger, guard, actions, pos)

    def _action(self) -> Action:
        tok = self.tok
        if tok.is_kw("da_preprocess"):
            self.advance()
            return DaPreprocess(tok.pos)
        if tok.is_kw("da_train"):
            self.advance()
            return DaTrain(tok.pos)
        if tok.is_kw("da_predict"):
            self.advance()
            self.expect("LPAREN", "'('")
            features = [self._expr()]
            while self.accept("COMMA"):
                features.append(self._expr())
            self.expect("ARROW", "'->' before result property")
            result = self.expect_ident("result property name").text
            self.expect("RPAREN", "')'")
            return DaPredict(tuple(features), result, tok.pos)
        name = self.expect_ident("an action").text
        if self.accept("BANG"):
            message = self.expect_ident("message name").text
            args: list[Expr] = []
            self.expect("LPAREN", "'('")
            if not self.at("RPAREN"):
                args.append(self._expr())
                while self.accept("COMMA"):
                    args.append(self._expr())
            self.expect("RPAREN", "')'")
            return SendAction(name, message, tuple(args), tok.pos)
        if self.accept("DEFINE"):
            return AssignAction(name, self._expr(), tok.pos)
        self.error_here("parse-expected", "expected '!' (send) or ':=' (assign) in action")
        raise ParseAbort()

    # ------------------------------------------------------------------
    # expressions
    # ------------------------------------------------------------------

    def _expr(self) -> Expr:
        self.enter()
        try:
            return self._or_expr()
        finally:
            self.leave()

    def _or_expr(self) -> Expr:
        left = self._and_expr()
        while self.at("OR"):
            pos = self.advance().pos
            left = Binary("||", left, self._and_expr(), pos)
        return left

    def _and_expr(self) -> Expr:
        left = self._cmp_expr()
        while self.at("AND"):
            pos = self.advance().pos
            left = Binary("&&", left, self._cmp_expr(), pos)
        return left

    _CMP = {"EQEQ": "==", "NEQ": "!=", "LT": "<", "LE": "<=", "GT": ">", "GE": ">="}

    def _cmp_expr(self) -> Expr:
        left = self._add_expr()
        if self.tok.kind in self._CMP:
            op_tok = self.advance()
            return Binary(self._CMP[op_tok.kind], left, self._add_expr(), op_tok.pos)
        return left

    def _add_expr(self) -> Expr:
        left = self._mul_expr()
        while self.tok.kind in ("PLUS", "MINUS"):
            op_tok = self.advance()
            op = "+" if op_tok.kind == "PLUS" else "-"
            left = Binary(op, left, self._mul_expr(), op_tok.pos)
        return left

    def _mul_expr(self) -> Expr:
        left = self._unary()
        while self.tok.kind in ("STAR", "SLASH"):
            op_tok = self.advance()
            op = "*" if op_tok.kind == "STAR" else "/"
            left = Binary(op, left, self._unary(), op_tok.pos)
        return left

    def _unary(self) -> Expr:
        tok = self.tok
        if tok.kind == "MINUS":
            self.advance()
            self.enter()
            try:
                return Unary("-", self._unary(), tok.pos)
            finally:
                self.leave()
        if tok.kind == "BANG":
            self.advance()
            self.enter()
            try:
                return Unary("!", self._unary(), tok.pos)
            finally:
                self.leave()
        return self._primary()

    def _primary(self) -> Expr:
        tok = self.tok
        if tok.kind in ("INT", "REAL", "STRING"):
            self.advance()
            return Lit(tok.value, tok.pos)  # type: ignore[arg-type]
        if tok.kind == "IDENT":
            self.advance()
            if tok.text == "true":
                return Lit(True, tok.pos)
            if tok.text == "false":
                return Lit(False, tok.pos)
            return Name(tok.text, tok.pos)
        if tok.kind == "LPAREN":
            self.advance()
            self.enter()
            try:
                inner = self._expr()
            finally:
                self.leave()
            self.expect("RPAREN", "')'")
            return inner
        self.error_here("parse-expected", f"expected an expression, found {self._describe()}")
        raise ParseAbort()

    # ------------------------------------------------------------------
    # pipelines
    # ------------------------------------------------------------------

    def _pipeline(self) -> PipelineGraph:
        start = self.expect_kw("pipeline").pos
        name = self.expect_ident("pipeline name").text
        self.expect("LBRACE", "'{'")
        instances: list[Instance] = []
        connectors: list[Connector] = []
        seen: dict[str, SourcePos] = {}
        while not self.at("RBRACE") and not self.at("EOF"):
            if self.at_kw("instance"):
                inst = self._instance()
                if inst.name in seen:
                    self.sink.error(
                        "sys-duplicate-instance",
                        f"duplicate instance '{inst.name}'",
                        inst.pos,
                        related=(seen[inst.name],),
                    )
                else:
                    seen[inst.name] = inst.pos
                    instances.append(inst)
            elif self.at_kw("connect"):
                connectors.append(self._connector())
            else:
                self.error_here("parse-expected", f"expected 'instance' or 'connect', found {self._describe()}")
                raise ParseAbort()
        self.expect("RBRACE", "'}' closing pipeline")
        return PipelineGraph(name, tuple(instances), tuple(connectors), start)

    def _instance(self) -> Instance:
        start = self.expect_kw("instance").pos
        name = self.expect_ident("instance name").text
        self.expect("COLON", "':'")
        kind_tok = self.expect_ident("instance kind thing/network/stub")
        if kind_tok.text == "thing":
            type_name = self.expect_ident("thing name").text
            return Instance(name, "thing", type_name, pos=start)
        if kind_tok.text == "network":
            type_name = self.expect_ident("network name").text
            bindings: list[tuple[str, int]] = []
            if self.accept("LPAREN"):
                if not self.at("RPAREN"):
                    bindings.append(self._binding())
                    while self.accept("COMMA"):
                        bindings.append(self._binding())
                self.expect("RPAREN", "')'")
            return Instance(name, "network", type_name, tuple(bindings), pos=start)
        if kind_tok.text == "stub":
            self.expect("LBRACE", "'{'")
            ports: list[StubPort] = []
            while not self.at("RBRACE") and not self.at("EOF"):
                d_tok = self.tok
                if d_tok.kind == "IDENT" and d_tok.text in ("in", "out"):
                    self.advance()
                else:
                    self.error_here("parse-expected", "expected 'in' or 'out' stub port")
                    raise ParseAbort()
                pname = self.expect_ident("port name").text
                self.expect("COLON", "':'")
                tensor = self._tensor_type()
                ports.append(StubPort(pname, d_tok.text, tensor, d_tok.pos))
            self.expect("RBRACE", "'}' closing stub")
            return Instance(name, "stub", None, (), tuple(ports), pos=start)
        self.sink.error("parse-expected", f"instance kind must be thing/network/stub, got '{kind_tok.text}'", kind_tok.pos)
        raise ParseAbort()

    def _binding(self) -> tuple[str, int]:
        key = self.expect_ident("generic name").text
        self.expect("EQUALS", "'='")
        tok = self.expect("INT", "an integer binding")
        return key, tok.value  # type: ignore[return-value]

    def _connector(self) -> Connector:
        start = self.expect_kw("connect").pos
        src_inst = self.expect_ident("source instance").text
        self.expect("DOT", "'.'")
        src_port = self.expect_ident("source port").text
        self.expect("ARROW", "'->'")
        dst_inst = self.expect_ident("target instance").text
        self.expect("DOT", "'.'")
        dst_port = self.expect_ident("target port").text
        return Connector(src_inst, src_port, dst_inst, dst_port, start)


def parse_system(text: str, file: str) -> tuple[list[ThingDef], list[PipelineGraph], list[Diagnostic]]:
    """Parse a `.scl` file into thing and pipeline declarations."""
    parser = _SysParser(text, file)
    try:
        things, pipelines = parser.parse_file()
    except ParseAbort:
        things, pipelines = [], []
    return things, pipelines, parser.sink.sorted()
