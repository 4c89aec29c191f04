from stepo.evaluation.benchmark import (
    DEFAULT_KS,
    EvalReport,
    compatibility_hook,
    materialize_candidates,
    materialize_paths,
    run_benchmark,
)
from stepo.evaluation.dataset import FULL_CORPUS_MIN_OUTFITS, Dataset, DatasetError, Outfit, UserSplit, ingest_dataset, write_dataset
from stepo.evaluation.metrics import RankedList, average_precision, mean_average_precision, recall_at_k

__all__ = [
    "DEFAULT_KS",
    "FULL_CORPUS_MIN_OUTFITS",
    "Dataset",
    "DatasetError",
    "EvalReport",
    "Outfit",
    "RankedList",
    "UserSplit",
    "average_precision",
    "compatibility_hook",
    "ingest_dataset",
    "materialize_candidates",
    "materialize_paths",
    "mean_average_precision",
    "recall_at_k",
    "run_benchmark",
    "write_dataset",
]
