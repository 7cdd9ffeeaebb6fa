"""Deterministic code generation: training programs, runtime glue, and
component stubs, all listed in a digest manifest.

Generated bytes are a pure function of the analyzed model unit, the backend
id, and the toolchain version embedded in every header; nothing depends on
the clock or the host.
"""

from __future__ import annotations


def header_comment() -> str:
    from .. import __version__

    return f"// generated by mlcforge {__version__} -- do not edit"


from ..analysis import AnalysisResult  # noqa: E402
from .backends import BackendAdapter, UnsupportedCapability, get_backend, model_spec_for  # noqa: E402
from .fileset import GeneratedFile, GeneratedFileSet, write_fileset  # noqa: E402
from .glue import generate_runtime_glue  # noqa: E402
from .stubs import generate_component_stubs  # noqa: E402
from .training import generate_training_program, training_plan_tree  # noqa: E402

__all__ = [
    "BackendAdapter",
    "GeneratedFile",
    "GeneratedFileSet",
    "UnsupportedCapability",
    "generate_all",
    "generate_component_stubs",
    "generate_runtime_glue",
    "generate_training_program",
    "get_backend",
    "header_comment",
    "model_spec_for",
    "training_plan_tree",
    "write_fileset",
]


def generate_all(analysis: AnalysisResult) -> GeneratedFileSet:
    """Generate everything for an analysis-clean unit, plus gen/MANIFEST."""
    fileset = GeneratedFileSet()
    for name in sorted(analysis.units):
        info = analysis.units[name]
        backend = get_backend(info.unit.backend)
        fileset = fileset.merge(generate_training_program(info, backend))
    for thing in analysis.unit.things:
        fileset = fileset.merge(generate_runtime_glue(thing))
    for pipeline in analysis.unit.pipelines:
        fileset = fileset.merge(generate_component_stubs(pipeline))
    return fileset.with_manifest()
