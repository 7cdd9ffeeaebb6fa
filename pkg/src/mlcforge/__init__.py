"""mlcforge: a model-driven toolchain for ML-enabled component systems.

Textual DSLs for neural architectures, training configurations, and
component/statechart composition; semantic validation; deterministic code
generation; a change-driven build system with artifact archives; and a
deterministic simulator executing composed systems end to end.
"""

__version__ = "0.1.0"
