"""Deterministic event-driven execution of a composed system.

Semantics:

- Every thing instance starts in its statechart's initial state, then runs
  triggerless transitions to quiescence.
- Each connector is an unbounded FIFO; a global scheduler pops the earliest
  (virtual time, insertion order) event. Delivery latency defaults to one
  tick per hop (scenario-configurable per connector).
- Firing a transition enters the target state first, then executes the
  transition's actions in order, so the trace shows work happening inside
  the state it names (the predict action runs in the "predicting" state and
  the next state entered afterwards is "ready").
- Receives fire the unique enabled transition; several enabled at once is a
  deterministic NondeterministicChoice failure; none means the message is
  consumed without effect.
- Network instances apply their bound predictor to arriving tensors and emit
  the result on their output port; stub instances record deliveries only.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

from ..analysis import AnalysisResult, UnitInfo
from ..bridge import launcher_from_command
from ..buildsys.store import Store
from ..codegen import get_backend, model_spec_for, training_plan_tree
from ..model import (
    INT,
    REAL,
    AssignAction,
    Binary,
    ConfigTree,
    DaPredict,
    DaPreprocess,
    DaTrain,
    EnumToken,
    Expr,
    Instance,
    Lit,
    Name,
    PipelineGraph,
    ScalarType,
    SendAction,
    TensorType,
    ThingDef,
    Transition,
    Unary,
)
from .predictors import CachingPredictor, OracleStub, Predictor, TrainedModel, UnboundPredictor
from .scenario import Scenario
from .trace import TensorValue, Trace, TraceEvent, render_value


class SimulationError(Exception):
    pass


class StepLimitExceeded(SimulationError):
    def __init__(self, limit: int, seq: int):
        super().__init__(f"step limit {limit} exceeded at trace position {seq}")
        self.limit = limit
        self.seq = seq


@dataclass
class _ThingState:
    instance: Instance
    thing: ThingDef
    state: str
    properties: dict = field(default_factory=dict)


@dataclass(frozen=True)
class _Delivery:
    target: str
    port: str
    message: str
    args: tuple


def _default_property(ptype) -> object:
    if isinstance(ptype, ScalarType):
        return {"int": 0, "real": 0.0, "bool": False, "string": ""}[ptype.kind]
    return TensorValue((), ())


def _eval(expr: Expr, scope: dict) -> object:
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Name):
        if expr.id not in scope:
            raise SimulationError(f"unknown name '{expr.id}' at runtime")
        return scope[expr.id]
    if isinstance(expr, Unary):
        value = _eval(expr.operand, scope)
        if expr.op == "-":
            return -value  # type: ignore[operator]
        return not value
    if isinstance(expr, Binary):
        left = _eval(expr.left, scope)
        if expr.op == "&&":
            return bool(left) and bool(_eval(expr.right, scope))
        if expr.op == "||":
            return bool(left) or bool(_eval(expr.right, scope))
        right = _eval(expr.right, scope)
        if expr.op == "+":
            return left + right  # type: ignore[operator]
        if expr.op == "-":
            return left - right  # type: ignore[operator]
        if expr.op == "*":
            return left * right  # type: ignore[operator]
        if expr.op == "/":
            if right == 0:
                raise SimulationError("division by zero in expression")
            if isinstance(left, int) and isinstance(right, int):
                return int(left / right)
            return left / right  # type: ignore[operator]
        if expr.op == "==":
            return left == right
        if expr.op == "!=":
            return left != right
        if expr.op == "<":
            return left < right  # type: ignore[operator]
        if expr.op == "<=":
            return left <= right  # type: ignore[operator]
        if expr.op == ">":
            return left > right  # type: ignore[operator]
        return left >= right  # type: ignore[operator]
    raise TypeError(f"not an expression: {expr!r}")


def _preprocess_payload(info: UnitInfo) -> ConfigTree:
    backend = get_backend(info.unit.backend)
    spec = model_spec_for(info, backend)
    tree = training_plan_tree(info, spec, backend)
    entries = [(k, v) for k, v in tree.entries if k in ("unit", "data", "plan")]
    return ConfigTree(tuple(entries))


class Simulation:
    def __init__(
        self,
        analysis: AnalysisResult,
        scenario: Scenario,
        store: Store | None = None,
        bridge_launcher=None,
        predictor_override: str | None = None,
        predictors: dict[str, Predictor] | None = None,
    ):
        self.analysis = analysis
        self.unit = analysis.unit
        self.scenario = scenario
        self.store = store
        self.predictor_override = predictor_override
        self._bridge_launcher = bridge_launcher
        self.pipeline = self._select_pipeline()
        self.trace = Trace()
        self._seq = itertools.count(1)
        self._steps = 0
        self._heap: list[tuple[int, int, _Delivery]] = []
        self._insert = itertools.count()
        self._now = 0
        self.things: dict[str, _ThingState] = {}
        self.networks: dict[str, Instance] = {}
        self.stubs: dict[str, Instance] = {}
        self._routes: dict[tuple[str, str], list[tuple[str, str, int, str | None]]] = {}
        self._predictors: dict[str, Predictor] = predictors if predictors is not None else {}
        self._owns_predictors = predictors is None
        self._setup()

    # -- setup -----------------------------------------------------------

    def _select_pipeline(self) -> PipelineGraph:
        if self.scenario.pipeline:
            pipe = self.unit.pipeline(self.scenario.pipeline)
            if pipe is None:
                raise SimulationError(f"scenario names unknown pipeline '{self.scenario.pipeline}'")
            return pipe
        if len(self.unit.pipelines) != 1:
            raise SimulationError(
                f"project has {len(self.unit.pipelines)} pipelines; scenario must name one"
            )
        return self.unit.pipelines[0]

    def _setup(self) -> None:
        for inst in self.pipeline.instances:
            if inst.kind == "thing":
                thing = self.unit.thing(inst.type_name or "")
                if thing is None:
                    raise SimulationError(f"instance '{inst.name}' has unknown thing type")
                props = {p.name: p.init if p.init is not None else _default_property(p.type) for p in thing.properties}
                self.things[inst.name] = _ThingState(inst, thing, thing.statechart.initial, props)
            elif inst.kind == "network":
                self.networks[inst.name] = inst
            else:
                self.stubs[inst.name] = inst
        for c in self.pipeline.connectors:
            latency = self.scenario.latencies.get(
                (c.src_instance, c.src_port, c.dst_instance, c.dst_port), 1
            )
            message_name = self._delivery_message_name(c.dst_instance, c.dst_port)
            self._routes.setdefault((c.src_instance, c.src_port), []).append(
                (c.dst_instance, c.dst_port, latency, message_name)
            )

    def _delivery_message_name(self, inst_name: str, port: str) -> str | None:
        """For tensor producers feeding a thing port: which declared message
        the delivery materializes as (the unique single-tensor message)."""
        state = self.things.get(inst_name)
        if state is None:
            return None
        pdef = state.thing.port(port)
        if pdef is None:
            return None
        candidates = []
        for mname in pdef.receives:
            mdef = state.thing.message(mname)
            if mdef and len(mdef.params) == 1 and isinstance(mdef.params[0][1], TensorType):
                candidates.append(mname)
        return candidates[0] if len(candidates) == 1 else None

    # -- predictors --------------------------------------------------------

    def _launcher(self):
        if self._bridge_launcher is not None:
            return self._bridge_launcher
        command = self.unit.manifest.bridge
        if not command:
            raise SimulationError("no bridge command configured (manifest key 'bridge')")
        return launcher_from_command(command, cwd=self.unit.manifest.root)

    def _train_unit_for_instance(self, inst_name: str) -> UnitInfo | None:
        if inst_name in self.things:
            thing_name = self.things[inst_name].thing.name
            return self.analysis.units.get(thing_name)
        inst = self.networks.get(inst_name)
        if inst is not None:
            for info in self.analysis.units.values():
                if info.unit.kind == "network" and info.unit.arch_name == inst.type_name:
                    if dict(info.unit.bindings) == dict(inst.bindings):
                        return info
        return None

    def predictor_for(self, inst_name: str) -> Predictor:
        if inst_name in self._predictors:
            return self._predictors[inst_name]
        mode = self.scenario.predictor_modes.get(inst_name)
        if self.predictor_override is not None:
            mode = self.predictor_override
        if mode is None:
            raise UnboundPredictor(inst_name)
        if mode == "oracle":
            table = self.scenario.oracle_tables.get(inst_name)
            if table is None:
                raise UnboundPredictor(inst_name)
            predictor: Predictor = OracleStub(inst_name, table)
        else:
            info = self._train_unit_for_instance(inst_name)
            if info is None:
                raise UnboundPredictor(inst_name)
            if self.store is None:
                raise SimulationError("trained predictors need a store (run a build first)")
            candidates = self.store.candidates(info.unit.name)
            if not candidates:
                raise SimulationError(
                    f"no trained archive for unit '{info.unit.name}'; run a build first"
                )
            archive = candidates[0].archive_path
            predictor = TrainedModel(inst_name, archive, self._launcher(), _preprocess_payload(info))
        predictor = CachingPredictor(predictor)
        self._predictors[inst_name] = predictor
        return predictor

    def close(self) -> None:
        if self._owns_predictors:
            for predictor in self._predictors.values():
                predictor.close()

    # -- tracing -----------------------------------------------------------

    def _emit(self, kind: str, thing: str, **details) -> TraceEvent:
        event = TraceEvent(
            next(self._seq), self._now, kind, thing,
            tuple((k, render_value(v)) for k, v in details.items() if v is not None),
        )
        self.trace.append(event)
        return event

    def _step(self) -> None:
        self._steps += 1
        if self._steps > self.scenario.step_limit:
            raise StepLimitExceeded(self.scenario.step_limit, len(self.trace))

    # -- execution ---------------------------------------------------------

    def run(self) -> Trace:
        try:
            self._startup()
            self._inject_all()
            self._loop()
        finally:
            self.close()
        return self.trace

    def _startup(self) -> None:
        for inst in self.pipeline.instances:
            state = self.things.get(inst.name)
            if state is None:
                continue
            self._emit("state_entered", inst.name, state=state.state)
        for inst in self.pipeline.instances:
            if inst.name in self.things:
                self._quiesce(self.things[inst.name])

    def _inject_all(self) -> None:
        for injection in self.scenario.injections:
            args = self._coerce_injection_args(injection)
            delivery = _Delivery(injection.thing, injection.port, injection.message, args)
            heapq.heappush(self._heap, (injection.at, next(self._insert), delivery))

    def _coerce_injection_args(self, injection) -> tuple:
        state = self.things.get(injection.thing)
        if state is None:
            raise SimulationError(
                f"injection targets unknown thing instance '{injection.thing}'"
            )
        mdef = state.thing.message(injection.message)
        if mdef is None:
            raise SimulationError(
                f"injection message '{injection.message}' not declared by thing "
                f"'{state.thing.name}'"
            )
        named = dict(injection.args)
        values = []
        for pname, ptype in mdef.params:
            if pname not in named:
                raise SimulationError(
                    f"injection of '{injection.message}' misses argument '{pname}'"
                )
            values.append(self._coerce_value(named[pname], ptype, pname))
        return tuple(values)

    def _coerce_value(self, raw, ptype, what: str):
        if isinstance(ptype, TensorType):
            if isinstance(raw, EnumToken):
                vector = self.scenario.inputs.get(raw.value)
                if vector is None:
                    raise SimulationError(f"'{what}': unknown scenario input '{raw.value}'")
                return TensorValue(vector, ptype.concrete_dims(), raw.value)
            if isinstance(raw, tuple):
                return TensorValue(tuple(float(v) for v in raw), ptype.concrete_dims())
            raise SimulationError(f"'{what}': tensor argument needs an input name or vector")
        if isinstance(raw, EnumToken):
            raise SimulationError(f"'{what}': unexpected token '{raw.value}' for scalar argument")
        if ptype == REAL and isinstance(raw, int):
            return float(raw)
        return raw

    def _loop(self) -> None:
        while self._heap:
            at, _, delivery = heapq.heappop(self._heap)
            self._now = max(self._now, at)
            self._step()
            self._deliver(delivery)

    def _deliver(self, delivery: _Delivery) -> None:
        target = delivery.target
        shown_args = dict(zip(self._param_names(target, delivery), delivery.args))
        self._emit(
            "message_received", target,
            port=delivery.port, message=delivery.message,
            **{f"arg_{k}": v for k, v in shown_args.items()},
        )
        if target in self.things:
            self._deliver_to_thing(self.things[target], delivery)
        elif target in self.networks:
            self._deliver_to_network(self.networks[target], delivery)
        # stubs: delivery recorded, nothing executes

    def _param_names(self, target: str, delivery: _Delivery) -> list[str]:
        state = self.things.get(target)
        if state is not None:
            mdef = state.thing.message(delivery.message)
            if mdef is not None:
                return [p for p, _ in mdef.params]
        return [f"v{i}" for i in range(len(delivery.args))]

    def _sender_param_names(self, inst_name: str, message: str, count: int) -> list[str]:
        state = self.things.get(inst_name)
        if state is not None:
            mdef = state.thing.message(message)
            if mdef is not None:
                return [p for p, _ in mdef.params]
        return [f"v{i}" for i in range(count)]

    def _deliver_to_thing(self, state: _ThingState, delivery: _Delivery) -> None:
        chart = state.thing.statechart
        enabled: list[Transition] = []
        for t in chart.outgoing(state.state):
            if t.trigger is None:
                continue
            if t.trigger.port != delivery.port or t.trigger.message != delivery.message:
                continue
            scope = dict(state.properties)
            scope.update(zip(t.trigger.params, delivery.args))
            if t.guard is None or bool(_eval(t.guard, scope)):
                enabled.append(t)
        if not enabled:
            return  # consumed without effect
        if len(enabled) > 1:
            raise SimulationError(
                f"nondeterministic choice: {len(enabled)} transitions enabled in "
                f"'{state.instance.name}' state '{state.state}' for "
                f"{delivery.port}?{delivery.message}"
            )
        t = enabled[0]
        scope = dict(zip(t.trigger.params, delivery.args))  # type: ignore[union-attr]
        self._fire(state, t, scope)
        self._quiesce(state)

    def _deliver_to_network(self, inst: Instance, delivery: _Delivery) -> None:
        if len(delivery.args) != 1 or not isinstance(delivery.args[0], TensorValue):
            raise SimulationError(
                f"network '{inst.name}' received a non-tensor payload on '{delivery.port}'"
            )
        value = delivery.args[0]
        predictor = self.predictor_for(inst.name)
        output = predictor.predict(value)
        self._emit(
            "prediction", inst.name,
            input=value, output="(" + ", ".join(f"{v:.6g}" for v in output) + ")",
        )
        arch = self.unit.network(inst.type_name or "")
        out_port = arch.output_ports[0].name if arch and arch.output_ports else "out"
        out_value = TensorValue(output, (len(output),))
        self._send(inst.name, out_port, out_port, (out_value,))

    def _fire(self, state: _ThingState, t: Transition, msg_scope: dict) -> None:
        self._step()
        state.state = t.target
        self._emit("state_entered", state.instance.name, state=t.target)
        for action in t.actions:
            self._run_action(state, action, msg_scope)

    def _quiesce(self, state: _ThingState) -> None:
        while True:
            candidates = []
            for t in state.thing.statechart.outgoing(state.state):
                if t.trigger is not None:
                    continue
                if t.guard is None or bool(_eval(t.guard, dict(state.properties))):
                    candidates.append(t)
            if not candidates:
                return
            if len(candidates) > 1:
                raise SimulationError(
                    f"nondeterministic choice: {len(candidates)} triggerless transitions "
                    f"enabled in '{state.instance.name}' state '{state.state}'"
                )
            self._fire(state, candidates[0], {})

    def _run_action(self, state: _ThingState, action, msg_scope: dict) -> None:
        inst_name = state.instance.name
        scope = dict(state.properties)
        scope.update(msg_scope)
        if isinstance(action, DaPreprocess):
            self._emit("action", inst_name, action="da_preprocess")
            self.predictor_for(inst_name).preprocess()
        elif isinstance(action, DaTrain):
            self._emit("action", inst_name, action="da_train")
            self.predictor_for(inst_name).train()
        elif isinstance(action, DaPredict):
            self._emit("action", inst_name, action="da_predict", result=action.result)
            value = self._predict_input(action, scope)
            output = self.predictor_for(inst_name).predict(value)
            stored = self._store_prediction(state, action.result, output)
            self._emit(
                "prediction", inst_name,
                input=value,
                output="(" + ", ".join(f"{v:.6g}" for v in output) + ")",
                stored=stored,
            )
        elif isinstance(action, SendAction):
            values = tuple(_eval(a, scope) for a in action.args)
            self._emit("action", inst_name, action="send", port=action.port, message=action.message)
            self._send(inst_name, action.port, action.message, values)
        elif isinstance(action, AssignAction):
            value = _eval(action.expr, scope)
            prop = state.thing.property(action.prop)
            if prop is not None and prop.type == REAL and isinstance(value, int):
                value = float(value)
            state.properties[action.prop] = value
            self._emit("action", inst_name, action="assign", property=action.prop, value=value)
        else:
            raise TypeError(f"not an action: {action!r}")

    def _predict_input(self, action: DaPredict, scope: dict) -> TensorValue:
        if len(action.features) == 1:
            value = _eval(action.features[0], scope)
            if isinstance(value, TensorValue):
                return value
            return TensorValue((float(value),), (1,))
        flat = []
        for feature in action.features:
            value = _eval(feature, scope)
            if isinstance(value, TensorValue):
                flat.extend(value.data)
            else:
                flat.append(float(value))
        return TensorValue(tuple(flat), (len(flat),))

    def _store_prediction(self, state: _ThingState, prop_name: str, output: tuple):
        prop = state.thing.property(prop_name)
        if prop is None:
            raise SimulationError(f"da_predict result property '{prop_name}' not declared")
        if prop.type == INT:
            stored: object = max(range(len(output)), key=lambda i: output[i]) if output else 0
        elif prop.type == REAL:
            stored = float(output[0]) if output else 0.0
        elif isinstance(prop.type, TensorType):
            stored = TensorValue(tuple(output), prop.type.concrete_dims())
        else:
            raise SimulationError(
                f"da_predict cannot store into property '{prop_name}' of type {prop.type}"
            )
        state.properties[prop_name] = stored
        return stored

    def _send(self, inst_name: str, port: str, message: str, args: tuple) -> None:
        names = self._sender_param_names(inst_name, message, len(args))
        self._emit(
            "message_sent", inst_name,
            port=port, message=message,
            **{f"arg_{name}": v for name, v in zip(names, args)},
        )
        for dst_inst, dst_port, latency, mapped_message in self._routes.get((inst_name, port), []):
            # tensor emissions from networks materialize as the receiving
            # thing's unique single-tensor message
            name = message
            if mapped_message is not None and inst_name in self.networks:
                name = mapped_message
            delivery = _Delivery(dst_inst, dst_port, name, args)
            heapq.heappush(self._heap, (self._now + latency, next(self._insert), delivery))


def run_scenario(
    analysis: AnalysisResult,
    scenario: Scenario,
    store: Store | None = None,
    bridge_launcher=None,
    predictor_override: str | None = None,
    predictors: dict[str, Predictor] | None = None,
) -> Trace:
    """Execute one scenario to quiescence and return the trace."""
    sim = Simulation(analysis, scenario, store, bridge_launcher, predictor_override, predictors)
    return sim.run()


def replay_determinism(
    analysis: AnalysisResult,
    scenario: Scenario,
    n: int,
    store: Store | None = None,
    bridge_launcher=None,
    predictor_override: str | None = None,
) -> bool:
    """Run the scenario ``n`` times (n >= 2); True iff all rendered traces are
    byte-identical. Trained predictors are cached after the first run so the
    comparison exercises the scheduler, not bridge I/O."""
    if n < 2:
        raise ValueError("replay check needs n >= 2")
    shared: dict[str, Predictor] = {}
    reference: str | None = None
    try:
        for _ in range(n):
            sim = Simulation(
                analysis, scenario, store, bridge_launcher, predictor_override, predictors=shared
            )
            rendered = sim.run().render()
            if reference is None:
                reference = rendered
            elif rendered != reference:
                return False
    finally:
        for predictor in shared.values():
            predictor.close()
    return True
