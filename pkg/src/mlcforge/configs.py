"""Training-configuration schemas and validation.

Schemas are inheritable: a child may add entries or narrow a parent entry
(tighter range, fewer enum choices) but never change its type. The shipped
registry covers the reference backend's algorithm families; defaults filled
during validation stand in for the "library default" behavior of external
ML frameworks, which are out of scope.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass

from .diagnostics import Diagnostic, DiagnosticSink, SourcePos
from .model import ConfigScalar, ConfigTree, ConfigValue, EnumToken, ModelError


class SchemaError(ModelError):
    """Raised for ill-formed schemas (cycles, contradictory overrides)."""


@dataclass(frozen=True)
class SchemaEntry:
    type: str  # int | real | bool | string | enum | list_int | list_real | list_enum | tree
    required: bool = False
    default: ConfigValue | None = None
    lo: float | None = None
    hi: float | None = None
    lo_open: bool = False
    hi_open: bool = False
    choices: tuple[str, ...] = ()
    schema: str | None = None  # nested schema name for type == "tree"
    min_items: int = 0

    def range_text(self) -> str:
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        return f"{left}{self.lo}, {self.hi}{right}"

    def narrower_or_equal(self, parent: SchemaEntry) -> bool:
        """True when this entry only tightens the parent's constraints."""
        if self.type != parent.type:
            return False
        if parent.lo is not None:
            if self.lo is None or self.lo < parent.lo:
                return False
            if self.lo == parent.lo and parent.lo_open and not self.lo_open:
                return False
        if parent.hi is not None:
            if self.hi is None or self.hi > parent.hi:
                return False
            if self.hi == parent.hi and parent.hi_open and not self.hi_open:
                return False
        if parent.choices and not set(self.choices) <= set(parent.choices):
            return False
        return True


@dataclass(frozen=True)
class ConfigSchema:
    name: str
    parent: str | None = None
    entries: tuple[tuple[str, SchemaEntry], ...] = ()

    def own(self, key: str) -> SchemaEntry | None:
        for k, e in self.entries:
            if k == key:
                return e
        return None


class SchemaRegistry:
    def __init__(self):
        self._schemas: dict[str, ConfigSchema] = {}

    def add(self, schema: ConfigSchema) -> None:
        if schema.name in self._schemas:
            raise SchemaError(f"schema '{schema.name}' already registered")
        self._schemas[schema.name] = schema

    def get(self, name: str) -> ConfigSchema | None:
        return self._schemas.get(name)

    def names(self) -> list[str]:
        return sorted(self._schemas)

    def chain(self, name: str) -> list[ConfigSchema]:
        """Inheritance chain from root ancestor down to ``name``."""
        chain: list[ConfigSchema] = []
        seen: set[str] = set()
        current: str | None = name
        while current is not None:
            if current in seen:
                raise SchemaError(f"schema inheritance cycle at '{current}'")
            seen.add(current)
            schema = self._schemas.get(current)
            if schema is None:
                raise SchemaError(f"unknown schema '{current}'")
            chain.append(schema)
            current = schema.parent
        chain.reverse()
        return chain

    def effective_entries(self, name: str) -> list[tuple[str, SchemaEntry]]:
        """Entries after inheritance: parent order first, child overrides in place."""
        merged: dict[str, SchemaEntry] = {}
        order: list[str] = []
        for schema in self.chain(name):
            for key, entry in schema.entries:
                if key not in merged:
                    order.append(key)
                merged[key] = entry
        return [(k, merged[k]) for k in order]

    def check_construction(self) -> None:
        """Assert the inheritance contract: children only narrow, never contradict."""
        for name in self._schemas:
            chain = self.chain(name)
            visible: dict[str, SchemaEntry] = {}
            for schema in chain:
                for key, entry in schema.entries:
                    if key in visible and not entry.narrower_or_equal(visible[key]):
                        raise SchemaError(
                            f"schema '{schema.name}' widens or retypes "
                            f"inherited entry '{key}'"
                        )
                    visible[key] = entry


def nearest_key(unknown: str, candidates) -> str | None:
    """Best fuzzy match for an unknown key; compares whole names and their
    underscore segments (so "epoks" still finds "num_epoch")."""
    best: tuple[float, str] | None = None
    for candidate in candidates:
        parts = [candidate] + candidate.split("_")
        score = max(difflib.SequenceMatcher(None, unknown, p).ratio() for p in parts)
        if best is None or score > best[0]:
            best = (score, candidate)
    if best is not None and best[0] >= 0.6:
        return best[1]
    return None


def _scalar_type_name(value: ConfigValue) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "real"
    if isinstance(value, EnumToken):
        return "enum"
    if isinstance(value, str):
        return "string"
    if isinstance(value, tuple):
        return "list"
    if isinstance(value, ConfigTree):
        return "tree"
    return type(value).__name__


def _check_range(entry: SchemaEntry, value: float) -> bool:
    if entry.lo is not None:
        if value < entry.lo or (entry.lo_open and value == entry.lo):
            return False
    if entry.hi is not None:
        if value > entry.hi or (entry.hi_open and value == entry.hi):
            return False
    return True


def _validate_scalar(
    key: str, entry: SchemaEntry, value: ConfigValue, pos: SourcePos, sink: DiagnosticSink
) -> bool:
    kind = _scalar_type_name(value)
    expected = entry.type
    if expected in ("int", "real"):
        if kind == "int" and expected == "real":
            kind = "real"  # ints coerce to reals
        if kind != expected:
            sink.error("cfg-type", f"'{key}' expects {expected}, got {kind}", pos)
            return False
        if not _check_range(entry, float(value)):  # type: ignore[arg-type]
            sink.error(
                "cfg-range",
                f"'{key}' value {value} outside allowed range {entry.range_text()}",
                pos,
            )
            return False
        return True
    if expected == "bool":
        if kind != "bool":
            sink.error("cfg-type", f"'{key}' expects bool, got {kind}", pos)
            return False
        return True
    if expected == "string":
        if kind != "string":
            sink.error("cfg-type", f"'{key}' expects a quoted string, got {kind}", pos)
            return False
        return True
    if expected == "enum":
        token = value.value if isinstance(value, EnumToken) else value
        if not isinstance(token, str):
            sink.error("cfg-type", f"'{key}' expects one of {entry.choices}, got {kind}", pos)
            return False
        if token not in entry.choices:
            near = difflib.get_close_matches(token, entry.choices, n=1)
            hint = f"did you mean '{near[0]}'?" if near else None
            sink.error(
                "cfg-enum",
                f"'{key}' value '{token}' not in {{{', '.join(entry.choices)}}}",
                pos,
                hint=hint,
            )
            return False
        return True
    raise SchemaError(f"unhandled scalar schema type '{expected}'")


def _validate_list(
    key: str, entry: SchemaEntry, value: ConfigValue, pos: SourcePos, sink: DiagnosticSink
) -> bool:
    if not isinstance(value, tuple):
        sink.error("cfg-type", f"'{key}' expects a list, got {_scalar_type_name(value)}", pos)
        return False
    if len(value) < entry.min_items:
        sink.error("cfg-range", f"'{key}' needs at least {entry.min_items} item(s)", pos)
        return False
    item_type = entry.type.removeprefix("list_")
    item_entry = SchemaEntry(
        type=item_type,
        lo=entry.lo,
        hi=entry.hi,
        lo_open=entry.lo_open,
        hi_open=entry.hi_open,
        choices=entry.choices,
    )
    ok = True
    for item in value:
        ok = _validate_scalar(key, item_entry, item, pos, sink) and ok
    return ok


def validate_config(
    config: ConfigTree,
    schema: str | ConfigSchema,
    registry: SchemaRegistry | None = None,
) -> tuple[list[Diagnostic], ConfigTree]:
    """Validate ``config`` against ``schema`` and fill defaults.

    Returns (diagnostics, effective config). The input tree is never mutated;
    the effective tree equals the input plus schema defaults for keys the
    input does not set. Unknown keys and out-of-range values are errors in
    the diagnostics list, never exceptions.
    """
    registry = registry or SCHEMAS
    name = schema if isinstance(schema, str) else schema.name
    sink = DiagnosticSink()
    entries = registry.effective_entries(name)
    entry_map = dict(entries)

    effective: list[tuple[str, ConfigValue]] = []
    for key, value in config.entries:
        pos = value.pos if isinstance(value, ConfigTree) else config.pos
        entry = entry_map.get(key)
        if entry is None:
            near = nearest_key(key, [k for k, _ in entries])
            hint = f"did you mean '{near}'?" if near else None
            sink.error("cfg-unknown-key", f"unknown key '{key}' for schema '{name}'", pos, hint=hint)
            continue
        if entry.type == "tree":
            if not isinstance(value, ConfigTree):
                sink.error("cfg-type", f"'{key}' expects a nested block", pos)
                continue
            sub_diags, sub_effective = validate_config(value, entry.schema or name, registry)
            sink.extend(sub_diags)
            effective.append((key, sub_effective))
        elif entry.type.startswith("list_"):
            if _validate_list(key, entry, value, pos, sink):
                effective.append((key, value))
        else:
            if _validate_scalar(key, entry, value, pos, sink):
                effective.append((key, value))

    present = {k for k, _ in effective} | {k for k, _ in config.entries}
    for key, entry in entries:
        if key in present:
            continue
        if entry.required:
            sink.error("cfg-missing-key", f"required key '{key}' missing for schema '{name}'", config.pos)
            continue
        if entry.type == "tree":
            sub_diags, sub_effective = validate_config(
                ConfigTree((), config.pos), entry.schema or name, registry
            )
            sink.extend(sub_diags)
            effective.append((key, sub_effective))
        elif entry.default is not None:
            effective.append((key, entry.default))

    return sink.items, ConfigTree(tuple(effective), config.pos)


# ---------------------------------------------------------------------------
# Shipped schemas for the reference backend
# ---------------------------------------------------------------------------

SCHEMAS = SchemaRegistry()

SCHEMAS.add(
    ConfigSchema(
        "optimizer",
        entries=(
            ("type", SchemaEntry("enum", choices=("sgd", "adam"), default=EnumToken("adam"))),
            # no upper bound here: lint rule R1 warns on lr > 1 instead
            ("learning_rate", SchemaEntry("real", lo=0.0, lo_open=True, default=0.001)),
            ("momentum", SchemaEntry("real", lo=0.0, hi=1.0, hi_open=True, default=0.0)),
            ("beta1", SchemaEntry("real", lo=0.0, hi=1.0, lo_open=True, hi_open=True, default=0.9)),
            ("beta2", SchemaEntry("real", lo=0.0, hi=1.0, lo_open=True, hi_open=True, default=0.999)),
            ("epsilon", SchemaEntry("real", lo=0.0, hi=0.1, lo_open=True, default=1e-8)),
        ),
    )
)

SCHEMAS.add(
    ConfigSchema(
        "base",
        entries=(
            ("seed", SchemaEntry("int", lo=0, default=42)),
            ("shuffle", SchemaEntry("bool", default=True)),
            ("validation_split", SchemaEntry("real", lo=0.0, hi=0.5, default=0.2)),
        ),
    )
)

SCHEMAS.add(
    ConfigSchema(
        "supervised",
        parent="base",
        entries=(
            ("num_epoch", SchemaEntry("int", lo=1, default=10)),
            ("batch_size", SchemaEntry("int", lo=1, default=32)),
            (
                "loss",
                SchemaEntry(
                    "enum",
                    choices=("auto", "categorical_crossentropy", "mean_squared_error"),
                    default=EnumToken("auto"),
                ),
            ),
            ("optimizer", SchemaEntry("tree", schema="optimizer")),
            ("standardize", SchemaEntry("bool", default=False)),
            ("normalize", SchemaEntry("bool", default=False)),
        ),
    )
)

SCHEMAS.add(
    ConfigSchema(
        "mlp",
        parent="supervised",
        entries=(
            ("hidden_layer_sizes", SchemaEntry("list_int", lo=1, default=(128,))),
            (
                "hidden_layers_activation_functions",
                SchemaEntry(
                    "list_enum",
                    choices=("relu", "sigmoid", "tanh"),
                    default=(EnumToken("relu"),),
                ),
            ),
            ("dropout", SchemaEntry("real", lo=0.0, hi=1.0, default=0.0)),
        ),
    )
)

SCHEMAS.add(ConfigSchema("linear_regression", parent="supervised"))
SCHEMAS.add(ConfigSchema("logistic_regression", parent="supervised"))

#: schema used to validate each algorithm's hyperparameter tree
ALGORITHM_SCHEMAS = {
    "mlp": "mlp",
    "linear_regression": "linear_regression",
    "logistic_regression": "logistic_regression",
}

SCHEMAS.check_construction()
