"""Core domain types: the resolved, post-parse representation shared by all
toolchain passes, plus generic-binding and def-block elaboration.

Everything here is immutable after construction (frozen dataclasses with
tuple-valued fields), so values can be shared freely between passes and
threads. Source positions live in a ``pos`` field excluded from equality, so
structural comparison ignores formatting and layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

from .diagnostics import SourcePos

NOPOS = SourcePos("<none>")


class ModelError(Exception):
    """Base for hard errors raised by core-model operations."""


class MissingBinding(ModelError):
    def __init__(self, name: str):
        super().__init__(f"no binding for generic parameter '{name}'")
        self.name = name


class NonPositiveBinding(ModelError):
    def __init__(self, name: str, value: int):
        super().__init__(f"generic parameter '{name}' bound to non-positive value {value}")
        self.name = name
        self.value = value


class UnknownDefBlock(ModelError):
    def __init__(self, name: str):
        super().__init__(f"reference to unknown def block '{name}'")
        self.name = name


class CyclicDefBlock(ModelError):
    def __init__(self, chain: tuple[str, ...]):
        super().__init__("cyclic def blocks: " + " -> ".join(chain))
        self.chain = chain


class DefArgError(ModelError):
    pass


# ---------------------------------------------------------------------------
# Tensor and value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenericRef:
    """A symbolic dimension reference, bound at instantiation."""

    name: str

    def __str__(self) -> str:
        return self.name


Dim = Union[int, GenericRef]


@dataclass(frozen=True)
class TensorType:
    """Element range plus ordered dims, e.g. Q(0:255)^{28,28,1}.

    ``kind`` is "q" for integer-quantized ranges and "r" for real ranges.
    """

    kind: str
    lo: float
    hi: float
    dims: tuple[Dim, ...]

    def __post_init__(self):
        if self.kind not in ("q", "r"):
            raise ModelError(f"bad tensor kind {self.kind!r}")
        if not self.dims:
            raise ModelError("tensor type needs at least one dimension")
        if self.lo >= self.hi:
            raise ModelError(f"tensor range lower bound {self.lo} not below upper {self.hi}")
        for d in self.dims:
            if isinstance(d, int) and d < 1:
                raise ModelError(f"tensor dimension {d} must be >= 1")

    @property
    def is_concrete(self) -> bool:
        return all(isinstance(d, int) for d in self.dims)

    def concrete_dims(self) -> tuple[int, ...]:
        if not self.is_concrete:
            raise ModelError("tensor type still has symbolic dimensions")
        return self.dims  # type: ignore[return-value]


@dataclass(frozen=True)
class ScalarType:
    """A message-parameter / property type: int, real, bool, or string."""

    kind: str  # int | real | bool | string

    def __str__(self) -> str:
        return {"int": "Int", "real": "Real", "bool": "Bool", "string": "Str"}[self.kind]


ValueType = Union[ScalarType, TensorType]

INT = ScalarType("int")
REAL = ScalarType("real")
BOOL = ScalarType("bool")
STRING = ScalarType("string")


# ---------------------------------------------------------------------------
# Network architectures
# ---------------------------------------------------------------------------

# Layer argument values; pairs encode kernel/window/stride sizes.
ArgValue = Union[int, float, str, GenericRef, tuple]

#: canonical parameter order per layer kind (positional args map onto these)
LAYER_PARAMS: dict[str, tuple[str, ...]] = {
    "Convolution": ("kernel", "channels", "stride", "padding"),
    "Pooling": ("kind", "window", "stride", "padding"),
    "FullyConnected": ("units",),
    "Flatten": (),
    "Relu": (),
    "Sigmoid": (),
    "Tanh": (),
    "Softmax": (),
    "Dropout": ("rate",),
    "ImportPretrained": ("archive", "frozen"),
    "Wildcard": (),  # parsed and rejected downstream
}

LAYER_DEFAULTS: dict[str, dict[str, ArgValue]] = {
    "Convolution": {"stride": (1, 1), "padding": "valid"},
    "Pooling": {"padding": "valid"},
    "ImportPretrained": {"frozen": True},
}


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    args: tuple[tuple[str, ArgValue], ...] = ()
    pos: SourcePos = field(default=NOPOS, compare=False)

    def arg(self, name: str, default: ArgValue | None = None) -> ArgValue | None:
        for key, value in self.args:
            if key == name:
                return value
        return LAYER_DEFAULTS.get(self.kind, {}).get(name, default)


@dataclass(frozen=True)
class DefCall:
    """Use of a def block inside a network body or another def block."""

    name: str
    args: tuple[tuple[str, ArgValue], ...] = ()  # "" keys mean positional
    pos: SourcePos = field(default=NOPOS, compare=False)


BodyElem = Union[LayerSpec, DefCall]


@dataclass(frozen=True)
class DefBlock:
    name: str
    params: tuple[str, ...]
    body: tuple[BodyElem, ...]
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Port:
    name: str
    tensor: TensorType
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class NetworkArch:
    name: str
    generics: tuple[str, ...]
    input_ports: tuple[Port, ...]
    output_ports: tuple[Port, ...]
    def_blocks: tuple[DefBlock, ...]
    body_input: str
    body: tuple[BodyElem, ...]
    body_output: str
    pos: SourcePos = field(default=NOPOS, compare=False)

    def def_block(self, name: str) -> DefBlock | None:
        for block in self.def_blocks:
            if block.name == name:
                return block
        return None

    def input_port(self, name: str) -> Port | None:
        for p in self.input_ports:
            if p.name == name:
                return p
        return None

    def output_port(self, name: str) -> Port | None:
        for p in self.output_ports:
            if p.name == name:
                return p
        return None

    @property
    def is_concrete(self) -> bool:
        return not self.generics


# ---------------------------------------------------------------------------
# Config trees (the ConfLang value model)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnumToken:
    """A bare identifier scalar such as ``adam`` (distinct from "adam")."""

    value: str

    def __str__(self) -> str:
        return self.value


ConfigScalar = Union[int, float, bool, str, EnumToken]
ConfigValue = Union[ConfigScalar, tuple, "ConfigTree"]


@dataclass(frozen=True)
class ConfigTree:
    """Ordered key -> value map; keys unique per level."""

    entries: tuple[tuple[str, ConfigValue], ...] = ()
    pos: SourcePos = field(default=NOPOS, compare=False)

    def __post_init__(self):
        keys = [k for k, _ in self.entries]
        if len(keys) != len(set(keys)):
            raise ModelError("duplicate keys in config tree")

    def get(self, key: str, default: ConfigValue | None = None) -> ConfigValue | None:
        for k, v in self.entries:
            if k == key:
                return v
        return default

    def has(self, key: str) -> bool:
        return any(k == key for k, _ in self.entries)

    def keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.entries)

    def with_entry(self, key: str, value: ConfigValue) -> ConfigTree:
        """Return a copy with ``key`` set (replaced in place or appended)."""
        if self.has(key):
            return ConfigTree(
                tuple((k, value if k == key else v) for k, v in self.entries), self.pos
            )
        return ConfigTree(self.entries + ((key, value),), self.pos)

    def lookup(self, path: str, default=None):
        """Dotted-path convenience getter, e.g. tree.lookup("optimizer.type")."""
        node: ConfigValue | None = self
        for part in path.split("."):
            if not isinstance(node, ConfigTree):
                return default
            node = node.get(part)
            if node is None:
                return default
        return node


@dataclass(frozen=True)
class NamedConfig:
    """A named `.tcl` document bound to a validation schema."""

    name: str
    schema: str
    tree: ConfigTree
    pos: SourcePos = field(default=NOPOS, compare=False)


# ---------------------------------------------------------------------------
# Things, statecharts, ML blocks
# ---------------------------------------------------------------------------

class Expr:
    """Marker base for guard / action expressions."""


@dataclass(frozen=True)
class Lit(Expr):
    value: Union[int, float, bool, str]
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Name(Expr):
    id: str
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    pos: SourcePos = field(default=NOPOS, compare=False)


class Action:
    """Marker base for transition actions."""


@dataclass(frozen=True)
class SendAction(Action):
    port: str
    message: str
    args: tuple[Expr, ...] = ()
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class AssignAction(Action):
    prop: str
    expr: Expr
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class DaPreprocess(Action):
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class DaTrain(Action):
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class DaPredict(Action):
    features: tuple[Expr, ...]
    result: str
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Receive:
    port: str
    message: str
    params: tuple[str, ...]
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    trigger: Receive | None = None
    guard: Expr | None = None
    actions: tuple[Action, ...] = ()
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class StateMachine:
    initial: str
    states: tuple[str, ...]
    transitions: tuple[Transition, ...]
    pos: SourcePos = field(default=NOPOS, compare=False)

    def outgoing(self, state: str) -> tuple[Transition, ...]:
        return tuple(t for t in self.transitions if t.source == state)


@dataclass(frozen=True)
class MessageDef:
    name: str
    params: tuple[tuple[str, ValueType], ...]
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class PortDef:
    name: str
    direction: str  # in | out | inout
    receives: tuple[str, ...] = ()
    sends: tuple[str, ...] = ()
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class PropertyDef:
    name: str
    type: ValueType
    init: Union[int, float, bool, str] | None = None
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class MLBlock:
    features: tuple[str, ...]
    labels_mode: str  # ON | OFF | SEMI
    label_name: str | None
    dataset_path: str
    algorithm: str
    hyperparams: ConfigTree
    backend: str = "reference"
    prediction_results: str | None = None
    training_results: str | None = None
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class ThingDef:
    name: str
    messages: tuple[MessageDef, ...]
    ports: tuple[PortDef, ...]
    properties: tuple[PropertyDef, ...]
    ml_block: MLBlock | None
    statechart: StateMachine
    pos: SourcePos = field(default=NOPOS, compare=False)

    def message(self, name: str) -> MessageDef | None:
        for m in self.messages:
            if m.name == name:
                return m
        return None

    def port(self, name: str) -> PortDef | None:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    def property(self, name: str) -> PropertyDef | None:
        for p in self.properties:
            if p.name == name:
                return p
        return None


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StubPort:
    name: str
    direction: str  # in | out
    tensor: TensorType
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Instance:
    name: str
    kind: str  # thing | network | stub
    type_name: str | None = None
    bindings: tuple[tuple[str, int], ...] = ()
    stub_ports: tuple[StubPort, ...] = ()
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Connector:
    src_instance: str
    src_port: str
    dst_instance: str
    dst_port: str
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class PipelineGraph:
    name: str
    instances: tuple[Instance, ...]
    connectors: tuple[Connector, ...]
    pos: SourcePos = field(default=NOPOS, compare=False)

    def instance(self, name: str) -> Instance | None:
        for i in self.instances:
            if i.name == name:
                return i
        return None


# ---------------------------------------------------------------------------
# Preprocessing plans and project-level containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanStep:
    kind: str  # standardize | normalize | one_hot
    columns: tuple[str, ...] = ()  # empty for one_hot (applies to the label)


@dataclass(frozen=True)
class PreprocessPlan:
    steps: tuple[PlanStep, ...] = ()

    def __post_init__(self):
        seen: set[str] = set()
        for step in self.steps:
            if step.kind in ("standardize", "normalize"):
                for col in step.columns:
                    if col in seen:
                        raise ModelError(f"column '{col}' in more than one scaling step")
                    seen.add(col)

    def has(self, kind: str) -> bool:
        return any(s.kind == kind for s in self.steps)


@dataclass(frozen=True)
class ProjectManifest:
    project: str
    root: str
    backend: str = "reference"
    automl_mode: bool = False
    store: str = ".mlc-store"
    globs: tuple[tuple[str, str], ...] = ()  # (sub-language, glob)
    bridge: str | None = None
    train_entries: ConfigTree = ConfigTree()
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class TrainableUnit:
    """One unit the build system plans and trains: a manifest-declared network
    or a thing's ML block."""

    name: str
    kind: str  # network | thing
    arch_name: str | None  # networks only
    bindings: tuple[tuple[str, int], ...]
    config_name: str | None  # networks reference a named .tcl config
    dataset: str
    label: str | None
    features: tuple[str, ...]  # empty means "all columns except label"
    labels_mode: str = "ON"
    algorithm: str = "mlp"
    backend: str = "reference"
    sequential: bool = False
    training_results: str | None = None
    prediction_results: str | None = None
    raw_config: ConfigTree = ConfigTree()
    pos: SourcePos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class ModelUnit:
    """All parsed artifacts of one project."""

    manifest: ProjectManifest
    networks: tuple[NetworkArch, ...] = ()
    configs: tuple[NamedConfig, ...] = ()
    things: tuple[ThingDef, ...] = ()
    pipelines: tuple[PipelineGraph, ...] = ()
    train_units: tuple[TrainableUnit, ...] = ()
    files: tuple[str, ...] = ()

    def network(self, name: str) -> NetworkArch | None:
        for n in self.networks:
            if n.name == name:
                return n
        return None

    def config(self, name: str) -> NamedConfig | None:
        for c in self.configs:
            if c.name == name:
                return c
        return None

    def thing(self, name: str) -> ThingDef | None:
        for t in self.things:
            if t.name == name:
                return t
        return None

    def pipeline(self, name: str) -> PipelineGraph | None:
        for p in self.pipelines:
            if p.name == name:
                return p
        return None

    def train_unit(self, name: str) -> TrainableUnit | None:
        for u in self.train_units:
            if u.name == name:
                return u
        return None


# ---------------------------------------------------------------------------
# Generic resolution
# ---------------------------------------------------------------------------

def _subst_arg(value: ArgValue, bindings: dict[str, int]) -> ArgValue:
    # leave unknown refs alone: inside def blocks they are def parameters,
    # substituted later during expansion
    if isinstance(value, GenericRef):
        return bindings.get(value.name, value)
    if isinstance(value, tuple):
        return tuple(_subst_arg(v, bindings) for v in value)
    return value


def _subst_elem(elem: BodyElem, bindings: dict[str, int]) -> BodyElem:
    if isinstance(elem, LayerSpec):
        return replace(elem, args=tuple((k, _subst_arg(v, bindings)) for k, v in elem.args))
    return replace(elem, args=tuple((k, _subst_arg(v, bindings)) for k, v in elem.args))


def _subst_tensor(t: TensorType, bindings: dict[str, int]) -> TensorType:
    dims: list[Dim] = []
    for d in t.dims:
        if isinstance(d, GenericRef):
            if d.name not in bindings:
                raise MissingBinding(d.name)
            dims.append(bindings[d.name])
        else:
            dims.append(d)
    return replace(t, dims=tuple(dims))


def resolve_generics(arch: NetworkArch, bindings: dict[str, int]) -> NetworkArch:
    """Substitute generic dimension parameters throughout ``arch``.

    Bindings must cover every declared generic and be positive; extra bindings
    are ignored. Resolution is deterministic and idempotent once concrete.
    """
    for name in arch.generics:
        if name not in bindings:
            raise MissingBinding(name)
        value = bindings[name]
        if not isinstance(value, int) or value < 1:
            raise NonPositiveBinding(name, value)
    effective = {name: bindings[name] for name in arch.generics}
    return replace(
        arch,
        generics=(),
        input_ports=tuple(replace(p, tensor=_subst_tensor(p.tensor, effective)) for p in arch.input_ports),
        output_ports=tuple(replace(p, tensor=_subst_tensor(p.tensor, effective)) for p in arch.output_ports),
        def_blocks=tuple(
            replace(b, body=tuple(_subst_elem(e, effective) for e in b.body)) for b in arch.def_blocks
        ),
        body=tuple(_subst_elem(e, effective) for e in arch.body),
    )


# ---------------------------------------------------------------------------
# Def-block expansion
# ---------------------------------------------------------------------------

def _bind_def_args(block: DefBlock, call: DefCall) -> dict[str, int]:
    named = {k: v for k, v in call.args if k}
    positional = [v for k, v in call.args if not k]
    if len(positional) + len(named) != len(block.params):
        raise DefArgError(
            f"def '{block.name}' expects {len(block.params)} argument(s), "
            f"got {len(positional) + len(named)}"
        )
    values: dict[str, int] = {}
    for param, value in zip(block.params, positional):
        values[param] = value  # type: ignore[assignment]
    for key, value in named.items():
        if key not in block.params:
            raise DefArgError(f"def '{block.name}' has no parameter '{key}'")
        if key in values:
            raise DefArgError(f"duplicate argument '{key}' for def '{block.name}'")
        values[key] = value  # type: ignore[assignment]
    for param, value in values.items():
        if not isinstance(value, int):
            raise DefArgError(
                f"def '{block.name}' parameter '{param}' must be an integer, got {value!r}"
            )
    return values


def _subst_def_param(value: ArgValue, params: dict[str, int]) -> ArgValue:
    # Inside a def body, a GenericRef may name a def parameter.
    if isinstance(value, GenericRef) and value.name in params:
        return params[value.name]
    if isinstance(value, tuple):
        return tuple(_subst_def_param(v, params) for v in value)
    return value


def _expand(
    arch: NetworkArch, elems: tuple[BodyElem, ...], stack: tuple[str, ...]
) -> tuple[LayerSpec, ...]:
    flat: list[LayerSpec] = []
    for elem in elems:
        if isinstance(elem, LayerSpec):
            flat.append(elem)
            continue
        block = arch.def_block(elem.name)
        if block is None:
            raise UnknownDefBlock(elem.name)
        if elem.name in stack:
            raise CyclicDefBlock(stack + (elem.name,))
        params = _bind_def_args(block, elem)
        substituted: list[BodyElem] = []
        for inner in block.body:
            args = tuple((k, _subst_def_param(v, params)) for k, v in inner.args)
            substituted.append(replace(inner, args=args))
        flat.extend(_expand(arch, tuple(substituted), stack + (elem.name,)))
    return tuple(flat)


def _check_no_free_refs(value: ArgValue, layer: LayerSpec) -> None:
    if isinstance(value, GenericRef):
        raise ModelError(f"unresolved name '{value.name}' in {layer.kind} arguments")
    if isinstance(value, tuple):
        for v in value:
            _check_no_free_refs(v, layer)


def expand_def_blocks(arch: NetworkArch) -> NetworkArch:
    """Inline every def-block call so the body holds only primitive layers.

    Requires a generic-free arch. Expansion preserves dataflow order and is
    idempotent on already-flat architectures.
    """
    if arch.generics:
        raise ModelError(f"arch '{arch.name}' still has unresolved generics")
    flat = _expand(arch, arch.body, ())
    for layer in flat:
        for _, value in layer.args:
            _check_no_free_refs(value, layer)
    return replace(arch, body=flat, def_blocks=())
