"""Source positions and diagnostics shared by every toolchain pass.

Diagnostics are values, not exceptions: parsers and analysis passes collect
them and keep going, so one run surfaces as many findings as possible.
Rendering follows the ``file:line:col: severity[code]: message`` convention.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"

    def __str__(self) -> str:  # pragma: no cover - trivial
        return self.value


@dataclass(frozen=True, order=True)
class SourcePos:
    """A 1-based (line, column) position plus byte offset within a file."""

    file: str
    line: int = 1
    column: int = 1
    offset: int = 0

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    pos: SourcePos
    end: SourcePos | None = None
    hint: str | None = None
    related: tuple[SourcePos, ...] = ()

    def render(self) -> str:
        text = f"{self.pos}: {self.severity}[{self.code}]: {self.message}"
        if self.hint:
            text += f" (hint: {self.hint})"
        for pos in self.related:
            text += f"\n{pos}: info[{self.code}]: related location"
        return text

    def with_hint(self, hint: str) -> Diagnostic:
        return replace(self, hint=hint)


@dataclass
class DiagnosticSink:
    """Mutable collector used while a pass runs; results are read-only after."""

    items: list[Diagnostic] = field(default_factory=list)

    def add(self, diag: Diagnostic) -> None:
        self.items.append(diag)

    def error(self, code: str, message: str, pos: SourcePos, **kw) -> None:
        self.items.append(Diagnostic(Severity.ERROR, code, message, pos, **kw))

    def warning(self, code: str, message: str, pos: SourcePos, **kw) -> None:
        self.items.append(Diagnostic(Severity.WARNING, code, message, pos, **kw))

    def info(self, code: str, message: str, pos: SourcePos, **kw) -> None:
        self.items.append(Diagnostic(Severity.INFO, code, message, pos, **kw))

    def extend(self, diags: list[Diagnostic] | DiagnosticSink) -> None:
        if isinstance(diags, DiagnosticSink):
            diags = diags.items
        self.items.extend(diags)

    @property
    def has_errors(self) -> bool:
        return any(d.severity is Severity.ERROR for d in self.items)

    def sorted(self) -> list[Diagnostic]:
        """Deterministic ordering: by (file, offset), stable for ties."""
        return sorted(self.items, key=lambda d: (d.pos.file, d.pos.offset))


def render_all(diags: list[Diagnostic]) -> str:
    return "\n".join(d.render() for d in diags)
