"""Trace events: the simulator's observable output.

One event per line, tab-separated: sequence number, virtual time, kind,
thing, then the details as single-line canonical key-value text. Sequence
numbers increase strictly; identical runs render byte-identical traces.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ..frontend.printer import print_config_inline
from ..model import ConfigTree

KINDS = ("state_entered", "message_sent", "message_received", "action", "prediction")


@dataclass(frozen=True)
class TensorValue:
    """A tensor at runtime: flat row-major data plus the declared dims.

    ``name`` is the scenario input id when the value entered the simulation
    by name; it keys oracle-stub lookups and keeps traces compact.
    """

    data: tuple[float, ...]
    dims: tuple[int, ...] = ()
    name: str | None = None

    def render(self) -> str:
        if self.name:
            return f"@{self.name}"
        digest = hashlib.sha256(
            ",".join(f"{v:.6g}" for v in self.data).encode("ascii")
        ).hexdigest()[:8]
        return f"vec{len(self.data)}:{digest}"


def render_value(value) -> str:
    if isinstance(value, TensorValue):
        return value.render()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, str):
        return value
    return str(value)


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    time: int
    kind: str
    thing: str
    details: tuple[tuple[str, str], ...] = ()

    def detail(self, key: str) -> str | None:
        for k, v in self.details:
            if k == key:
                return v
        return None

    def render(self) -> str:
        tree = ConfigTree(tuple((k, v) for k, v in self.details))
        return f"{self.seq}\t{self.time}\t{self.kind}\t{self.thing}\t{print_config_inline(tree)}"


@dataclass
class Trace:
    events: list[TraceEvent] = field(default_factory=list)

    def append(self, event: TraceEvent) -> None:
        self.events.append(event)

    def render(self) -> str:
        return "\n".join(e.render() for e in self.events) + ("\n" if self.events else "")

    def count(self, kind: str) -> int:
        return sum(1 for e in self.events if e.kind == kind)

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)
