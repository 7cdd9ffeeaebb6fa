"""Lexers, parsers, and pretty-printers for the toolchain's sub-languages.

File extensions: ``.nal`` network architectures, ``.tcl`` training configs,
``.scl`` system composition (things + pipelines), ``mlc.project`` manifests,
``.scn`` simulation scenarios (config-value syntax). All files are UTF-8;
LF and CRLF are accepted on input and LF is emitted.
"""

from .conflang import parse_config, parse_value_document
from .manifest import parse_manifest
from .netlang import parse_network
from .printer import pretty_print
from .project import load_project
from .syslang import parse_system

__all__ = [
    "parse_network",
    "parse_config",
    "parse_value_document",
    "parse_system",
    "parse_manifest",
    "load_project",
    "pretty_print",
]
