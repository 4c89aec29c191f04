"""Preference/trend re-ranking of completed decision paths."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from stepo.kb.model import TrendEntry
from stepo.reasoning.tree import DecisionPath
from stepo.retrieval import PreferenceProfile


@dataclass(frozen=True)
class RerankConfig:
    clamp_lo: float = 0.1
    clamp_hi: float = 0.9
    cold_start_alpha: float = 0.7

    def __post_init__(self) -> None:
        if not 0 <= self.clamp_lo <= self.clamp_hi <= 1:
            raise ValueError("need 0 <= clamp_lo <= clamp_hi <= 1")
        if not 0 <= self.cold_start_alpha <= 1:
            raise ValueError("cold_start_alpha must lie in [0, 1]")


@dataclass(frozen=True)
class RerankWeights:
    alpha: float
    beta: float
    cold_start: bool = False

    def __post_init__(self) -> None:
        if not (0 <= self.alpha <= 1 and 0 <= self.beta <= 1) or abs(self.alpha + self.beta - 1) > 1e-9:
            raise ValueError(f"weights must be a convex pair, got ({self.alpha}, {self.beta})")


@dataclass(frozen=True)
class ScoredCandidate:
    path: DecisionPath
    preference: float
    trend: float
    final: float
    rank: int


def _pairs(path: DecisionPath) -> list[tuple[str, str]]:
    return sorted(path.attributes.items())


def preference_score(path: DecisionPath, profile: PreferenceProfile) -> float:
    pairs = _pairs(path)
    if not pairs:
        return 0.0
    return sum(profile.frequency(k, v) for k, v in pairs) / len(pairs)


def trend_score(path: DecisionPath, trends: Iterable[TrendEntry]) -> float:
    """Share of the path's attributes hit by an active trend, each hit worth its strongest trend's weight."""
    pairs = _pairs(path)
    if not pairs:
        return 0.0
    trends = list(trends)
    total = 0.0
    for k, v in pairs:
        desc = f"{k}={v}"
        total += max((t.weight for t in trends if desc in t.attribute_signature), default=0.0)
    return total / len(pairs)


def adapt_weights(profile: PreferenceProfile, config: RerankConfig | None = None) -> RerankWeights:
    config = config or RerankConfig()
    if profile.cold_start:
        return RerankWeights(config.cold_start_alpha, _complement(config.cold_start_alpha), cold_start=True)
    beta = min(config.clamp_hi, max(config.clamp_lo, profile.trend_match_rate))
    return RerankWeights(_complement(beta), beta)


def _complement(w: float) -> float:
    # keeps 1 - 0.7 printing as 0.3 in reports
    return round(1.0 - w, 12)


def rerank(
    paths: Sequence[DecisionPath],
    profile: PreferenceProfile,
    trends: Iterable[TrendEntry],
    config: RerankConfig | None = None,
    weights: RerankWeights | None = None,
) -> list[ScoredCandidate]:
    """Order paths by alpha * preference + beta * trend; ties keep search order."""
    w = weights or adapt_weights(profile, config)
    trends = list(trends)
    scored = []
    for rank, p in enumerate(paths):
        pref, trend = preference_score(p, profile), trend_score(p, trends)
        scored.append(ScoredCandidate(p, pref, trend, w.alpha * pref + w.beta * trend, rank))
    return order_candidates(scored)


def order_candidates(cands: Iterable[ScoredCandidate]) -> list[ScoredCandidate]:
    return sorted(cands, key=lambda c: (-c.final, c.rank, c.path.descriptors))
