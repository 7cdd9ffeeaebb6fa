"""Backend adapters: capability sets plus the mapping from architectures and
hyperparameters to the trainer's model spec.

One backend ships ("reference", the MLP family with degenerate linear and
logistic regression). The adapter interface keeps the door open for others;
codegen refuses any unit requesting capabilities its backend lacks.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..analysis import UnitInfo
from ..model import ConfigTree, EnumToken, LayerSpec, NetworkArch


class UnsupportedCapability(Exception):
    def __init__(self, backend: str, feature: str):
        super().__init__(f"backend '{backend}' does not support {feature}")
        self.backend = backend
        self.feature = feature


@dataclass(frozen=True)
class BackendAdapter:
    id: str
    algorithms: frozenset[str]
    layer_kinds: frozenset[str]
    label_modes: frozenset[str]


REFERENCE = BackendAdapter(
    id="reference",
    algorithms=frozenset({"mlp", "linear_regression", "logistic_regression"}),
    layer_kinds=frozenset({"FullyConnected", "Flatten", "Relu", "Sigmoid", "Tanh", "Softmax", "Dropout"}),
    label_modes=frozenset({"ON"}),
)

_BACKENDS = {REFERENCE.id: REFERENCE}

_ACTIVATION_LAYERS = {"Relu": "relu", "Sigmoid": "sigmoid", "Tanh": "tanh"}


def get_backend(backend_id: str) -> BackendAdapter:
    adapter = _BACKENDS.get(backend_id)
    if adapter is None:
        raise UnsupportedCapability(backend_id, "anything (unknown backend id)")
    return adapter


@dataclass(frozen=True)
class ModelSpec:
    """Trainer-facing MLP description (sizes, activations, head)."""

    kind: str
    input_size: int
    hidden_sizes: tuple[int, ...]
    activations: tuple[str, ...]
    output_size: int | None  # None: inferred from the label column at training time
    output_activation: str  # softmax | identity
    dropout: tuple[float, ...] = ()

    def to_tree(self) -> ConfigTree:
        entries: list[tuple[str, object]] = [
            ("kind", EnumToken(self.kind)),
            ("input", self.input_size),
            ("hidden_sizes", tuple(self.hidden_sizes)),
            ("activations", tuple(EnumToken(a) for a in self.activations)),
            ("output", self.output_size if self.output_size is not None else EnumToken("auto")),
            ("output_activation", EnumToken(self.output_activation)),
        ]
        if any(rate > 0 for rate in self.dropout):
            entries.append(("dropout", tuple(float(r) for r in self.dropout)))
        return ConfigTree(tuple(entries))  # type: ignore[arg-type]


def _product(dims) -> int:
    out = 1
    for d in dims:
        out *= int(d)
    return out


def spec_from_arch(arch: NetworkArch, backend: BackendAdapter) -> ModelSpec:
    """Interpret a flat concrete architecture as an MLP for the trainer.

    The body must reduce to [Flatten?] (FullyConnected activation? Dropout?)*
    FullyConnected Softmax?; any other layer is a capability error.
    """
    for layer in arch.body:
        assert isinstance(layer, LayerSpec)
        if layer.kind not in backend.layer_kinds:
            raise UnsupportedCapability(backend.id, f"layer {layer.kind}")

    in_port = arch.input_port(arch.body_input)
    assert in_port is not None
    input_size = _product(in_port.tensor.concrete_dims())

    sizes: list[int] = []
    activations: list[str] = []
    dropout: list[float] = []
    output_activation = "identity"
    layers = [l for l in arch.body if isinstance(l, LayerSpec)]
    index = 0
    if layers and layers[0].kind == "Flatten":
        index = 1
    elif len(in_port.tensor.dims) > 1:
        raise UnsupportedCapability(backend.id, "multi-dimensional input without a Flatten layer")
    pending_units: int | None = None
    for layer in layers[index:]:
        if layer.kind == "FullyConnected":
            if pending_units is not None:
                sizes.append(pending_units)
                activations.append("identity")
                dropout.append(0.0)
            pending_units = int(layer.arg("units"))  # type: ignore[arg-type]
        elif layer.kind in _ACTIVATION_LAYERS:
            if pending_units is None:
                raise UnsupportedCapability(backend.id, f"{layer.kind} before any FullyConnected layer")
            sizes.append(pending_units)
            activations.append(_ACTIVATION_LAYERS[layer.kind])
            dropout.append(0.0)
            pending_units = None
        elif layer.kind == "Dropout":
            if not dropout:
                raise UnsupportedCapability(backend.id, "Dropout before any hidden layer")
            dropout[-1] = float(layer.arg("rate"))  # type: ignore[arg-type]
        elif layer.kind == "Softmax":
            output_activation = "softmax"
        elif layer.kind == "Flatten":
            raise UnsupportedCapability(backend.id, "Flatten after the first layer")
    if pending_units is None:
        raise UnsupportedCapability(backend.id, "a network whose last trainable layer is not FullyConnected")
    output_size = pending_units

    return ModelSpec(
        kind="mlp",
        input_size=input_size,
        hidden_sizes=tuple(sizes),
        activations=tuple(activations),
        output_size=output_size,
        output_activation=output_activation,
        dropout=tuple(dropout),
    )


def spec_from_hyperparams(info: UnitInfo, backend: BackendAdapter) -> ModelSpec:
    """Build the trainer spec from an ML block's validated hyperparameters."""
    unit = info.unit
    if unit.algorithm not in backend.algorithms:
        raise UnsupportedCapability(backend.id, f"algorithm {unit.algorithm}")
    if unit.labels_mode not in backend.label_modes:
        raise UnsupportedCapability(backend.id, f"labels {unit.labels_mode} training")
    input_size = len(unit.features)
    if unit.algorithm == "mlp":
        raw_sizes = info.effective.get("hidden_layer_sizes", ())
        sizes = tuple(int(s) for s in raw_sizes)  # type: ignore[union-attr]
        raw_acts = info.effective.get("hidden_layers_activation_functions", ())
        acts = [str(a) for a in raw_acts]  # type: ignore[union-attr]
        if len(acts) == 1 and len(sizes) > 1:
            acts = acts * len(sizes)
        if len(acts) != len(sizes):
            raise UnsupportedCapability(
                backend.id,
                f"{len(sizes)} hidden layers with {len(acts)} activation functions",
            )
        rate = float(info.effective.get("dropout", 0.0))  # type: ignore[arg-type]
        return ModelSpec(
            kind="mlp",
            input_size=input_size,
            hidden_sizes=sizes,
            activations=tuple(acts),
            output_size=None,
            output_activation="softmax",
            dropout=tuple(rate for _ in sizes),
        )
    if unit.algorithm == "logistic_regression":
        return ModelSpec("mlp", input_size, (), (), None, "softmax")
    return ModelSpec("mlp", input_size, (), (), 1, "identity")


def model_spec_for(info: UnitInfo, backend: BackendAdapter) -> ModelSpec:
    if info.unit.kind == "network":
        if info.arch is None:
            raise UnsupportedCapability(backend.id, f"unresolved network for unit {info.unit.name}")
        if info.unit.labels_mode not in backend.label_modes:
            raise UnsupportedCapability(backend.id, f"labels {info.unit.labels_mode} training")
        return spec_from_arch(info.arch, backend)
    return spec_from_hyperparams(info, backend)


def loss_for(info: UnitInfo, spec: ModelSpec) -> str:
    configured = info.effective.get("loss")
    if configured is not None and str(configured) != "auto":
        return str(configured)
    if spec.output_activation == "softmax":
        return "categorical_crossentropy"
    return "mean_squared_error"
