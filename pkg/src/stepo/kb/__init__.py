from stepo.kb.io import (
    Finding,
    KBLoadError,
    KBValidationError,
    ValidationReport,
    build_kb,
    inspect_kb,
    load_kb,
    read_kb,
    serialize_kb,
    validate_kb,
)
from stepo.kb.model import (
    Category,
    ColorSpec,
    GarmentEntity,
    KnowledgeBase,
    PairingRule,
    RuleAttribute,
    ScenarioStyleMatrix,
    SemanticEntity,
    SilhouetteSpec,
    TrendEntry,
    hue_difference,
    project,
)
from stepo.kb.store import EmbeddingStore

__all__ = [
    "Category",
    "ColorSpec",
    "EmbeddingStore",
    "Finding",
    "GarmentEntity",
    "KBLoadError",
    "KBValidationError",
    "KnowledgeBase",
    "PairingRule",
    "RuleAttribute",
    "ScenarioStyleMatrix",
    "SemanticEntity",
    "SilhouetteSpec",
    "TrendEntry",
    "ValidationReport",
    "build_kb",
    "hue_difference",
    "inspect_kb",
    "load_kb",
    "project",
    "read_kb",
    "serialize_kb",
    "validate_kb",
]


def sample_kb_path():
    """Path of the bundled sample knowledge base."""
    from importlib.resources import files

    return files("stepo") / "data" / "sample_kb"
