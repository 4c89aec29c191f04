"""Knowledge-guided outfit recommendation: a fashion knowledge base plus a staged recommender."""

from stepo.kb import load_kb, sample_kb_path
from stepo.pipeline import CONFIGS, PipelineConfig, Recommendation, recommend

__version__ = "0.1.0"

__all__ = ["CONFIGS", "PipelineConfig", "Recommendation", "load_kb", "recommend", "sample_kb_path"]
