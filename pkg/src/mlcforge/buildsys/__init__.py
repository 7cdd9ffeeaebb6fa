"""Change-driven build orchestration: digests, staleness planning, training
execution over the bridge, and artifact archives."""

from .digests import arch_digest, config_digest, count_rows, dataset_digest, is_pure_append
from .executor import BuildReport, TrainingFailed, UnitResult, execute, train_payload
from .packaging import MissingInput, package_dataset, package_model, package_source
from .planner import BuildPlan, Decision, PlanError, UnitPlan, plan
from .store import ArtifactRecord, CorruptStore, Store, StoreRecord
from .watch import watch

__all__ = [
    "ArtifactRecord",
    "BuildPlan",
    "BuildReport",
    "CorruptStore",
    "Decision",
    "MissingInput",
    "PlanError",
    "Store",
    "StoreRecord",
    "TrainingFailed",
    "UnitPlan",
    "UnitResult",
    "arch_digest",
    "config_digest",
    "count_rows",
    "dataset_digest",
    "execute",
    "is_pure_append",
    "package_dataset",
    "package_model",
    "package_source",
    "plan",
    "train_payload",
    "watch",
]
