"""Ranking metrics: Recall@K and mean average precision (standard and as-printed variants)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

MAP_MODES = ("standard", "paper_literal")


@dataclass(frozen=True)
class RankedList:
    ranked: tuple[str, ...]
    truth: frozenset[str]

    @classmethod
    def of(cls, ranked: Iterable[str], truth: Iterable[str]) -> "RankedList":
        return cls(tuple(ranked), frozenset(truth))


def recall_at_k(lists: Sequence[RankedList], k: int) -> float:
    """Fraction of lists with any ground-truth item in the top ``k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not lists:
        return 0.0
    hits = sum(1 for rl in lists if rl.truth.intersection(rl.ranked[:k]))
    return hits / len(lists)


def average_precision(rl: RankedList, mode: str = "standard") -> float | None:
    """AP of one list; None when the list has no ground truth.

    ``paper_literal`` divides every precision term by its rank once more.
    """
    if mode not in MAP_MODES:
        raise ValueError(f"unknown MAP mode {mode!r}")
    if not rl.truth:
        return None
    hits, total = 0, 0.0
    for k, item in enumerate(rl.ranked, 1):
        if item in rl.truth:
            hits += 1
            term = hits / k
            total += term / k if mode == "paper_literal" else term
    return total / len(rl.truth)


def mean_average_precision(lists: Sequence[RankedList], mode: str = "standard") -> float:
    aps = []
    for i, rl in enumerate(lists):
        ap = average_precision(rl, mode)
        if ap is None:
            log.warning("sample %d has no ground truth; excluded from MAP", i)
            continue
        aps.append(ap)
    return sum(aps) / len(aps) if aps else 0.0
