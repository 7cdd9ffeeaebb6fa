"""Generated-file containers: deterministic, path-sorted, digest-manifested."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

#: ECMAScript reserved words that port/thing names must not shadow
_JS_RESERVED = frozenset(
    """break case catch class const continue debugger default delete do else
    enum export extends false finally for function if import in instanceof new
    null return super switch this throw true try typeof var void while with
    yield let static await""".split()
)

KINDS = ("training-program", "runtime-glue", "stub-interface", "manifest")


@dataclass(frozen=True)
class GeneratedFile:
    path: str
    content: bytes
    kind: str

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.content).hexdigest()


@dataclass(frozen=True)
class GeneratedFileSet:
    files: tuple[GeneratedFile, ...] = ()

    def __post_init__(self):
        paths = [f.path for f in self.files]
        if len(paths) != len(set(paths)):
            dupes = sorted({p for p in paths if paths.count(p) > 1})
            raise ValueError(f"duplicate generated paths: {dupes}")

    def merge(self, other: GeneratedFileSet) -> GeneratedFileSet:
        return GeneratedFileSet(tuple(sorted(self.files + other.files, key=lambda f: f.path)))

    def by_kind(self, kind: str) -> tuple[GeneratedFile, ...]:
        return tuple(f for f in self.files if f.kind == kind)

    def get(self, path: str) -> GeneratedFile | None:
        for f in self.files:
            if f.path == path:
                return f
        return None

    def with_manifest(self, manifest_path: str = "gen/MANIFEST") -> GeneratedFileSet:
        lines = [f"{f.path}\t{f.digest}" for f in sorted(self.files, key=lambda f: f.path)]
        manifest = GeneratedFile(manifest_path, ("\n".join(lines) + "\n").encode("utf-8"), "manifest")
        return self.merge(GeneratedFileSet((manifest,)))


def text_file(path: str, text: str, kind: str) -> GeneratedFile:
    return GeneratedFile(path, text.encode("utf-8"), kind)


def write_fileset(fileset: GeneratedFileSet, root: str) -> list[str]:
    """Materialize the set under ``root``; returns written relative paths."""
    written = []
    for f in sorted(fileset.files, key=lambda x: x.path):
        target = os.path.join(root, f.path)
        os.makedirs(os.path.dirname(target), exist_ok=True)
        with open(target, "wb") as fh:
            fh.write(f.content)
        written.append(f.path)
    return written


def sanitize_identifier(name: str) -> tuple[str, bool]:
    """Make ``name`` a safe ECMAScript identifier; True when it was changed."""
    cleaned = "".join(c if c.isalnum() or c == "_" else "_" for c in name)
    if not cleaned or cleaned[0].isdigit():
        cleaned = "_" + cleaned
    if cleaned in _JS_RESERVED:
        cleaned += "_"
    return cleaned, cleaned != name
