"""End-to-end recommendation: retrieval, fusion, tree search, re-ranking, explanation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping

from stepo.explain import ExplanationReport, assemble_report, explain_path
from stepo.kb.model import GarmentEntity, KnowledgeBase, project_descriptors
from stepo.reasoning.tree import SearchConfig, SearchResult, StylingRequest, run_tree_search
from stepo.rerank import RerankConfig, RerankWeights, ScoredCandidate, adapt_weights, rerank
from stepo.retrieval import (
    FusedKnowledge,
    KnowledgeItem,
    PreferenceProfile,
    fuse_knowledge,
    preference_items,
    retrieve_pairing_rules,
    retrieve_scene_style,
    retrieve_typical_outfits,
    trend_items,
)
from stepo.semantic import NoEvidenceError, infer_scenarios, infer_styles

log = logging.getLogger(__name__)

SCENARIO_KEEP = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    retrieval: bool = True
    rerank: bool = True
    explain: bool = True
    k_cases: int = 5
    search: SearchConfig = field(default_factory=SearchConfig)
    rerank_config: RerankConfig = field(default_factory=RerankConfig)


CONFIGS = {
    "full": PipelineConfig(),
    "no-retrieval": PipelineConfig(retrieval=False),
    "no-rerank": PipelineConfig(rerank=False),
    "reasoning-only": PipelineConfig(retrieval=False, rerank=False),
}


@dataclass
class Recommendation:
    candidates: list[ScoredCandidate]
    weights: RerankWeights
    knowledge: FusedKnowledge
    search: SearchResult
    inference: Mapping[str, Any]
    report: ExplanationReport | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def paths(self):
        return [c.path for c in self.candidates]

    @property
    def top(self) -> ScoredCandidate:
        return self.candidates[0]


def case_principle_vector(cases: list[KnowledgeItem], kb: KnowledgeBase) -> dict[str, float]:
    """Relevance-weighted mean of the retrieved cases' principle activations."""
    total = sum(i.relevance for i in cases)
    out: dict[str, float] = {}
    if total <= 0:
        return out
    for item in cases:
        for p, v in kb.cases[item.ref_id].principle_vector.items():
            out[p] = out.get(p, 0.0) + item.relevance * v / total
    return out


def infer_style_context(anchor: GarmentEntity, cases: list[KnowledgeItem], kb: KnowledgeBase) -> tuple[dict, dict, str]:
    """Style posterior and scenario scores for the anchor, with the evidence route used."""
    try:
        styles = infer_styles(kb.graph, case_principle_vector(cases, kb))
        route = "cases"
    except NoEvidenceError:
        projected = sorted(s.id for s in project_descriptors(anchor.descriptors(), kb.semantics) if s.kind == "style")
        projected = [s for s in projected if s in kb.matrix.styles] or list(kb.matrix.styles)
        styles = {s: 1 / len(projected) for s in projected}
        route = "projection"
    return styles, infer_scenarios(styles, kb.matrix), route


def retrieve_knowledge(
    anchor: GarmentEntity,
    kb: KnowledgeBase,
    profile: PreferenceProfile,
    config: PipelineConfig,
    store=None,
    fuser=None,
) -> tuple[FusedKnowledge, dict, list[str]]:
    warnings = []
    cases = retrieve_typical_outfits(anchor, kb, config.k_cases, store)
    if cases.warning:
        warnings.append(cases.warning)
    styles, scenarios, route = infer_style_context(anchor, list(cases), kb)
    peak = max(scenarios.values(), default=0.0)
    kept = [s for s, v in scenarios.items() if v >= SCENARIO_KEEP * peak]
    scene = [i for sc in kept for i in retrieve_scene_style(sc, None, kb, config.search.scene_threshold)]
    bundles = [cases, scene, retrieve_pairing_rules(anchor, kb), preference_items(profile), trend_items(kb.trends)]
    fused = fuse_knowledge(bundles, fuser)
    if fused.fallback:
        warnings.append("external fuser failed; deterministic fusion used")
    inference = {"route": route, "styles": styles, "scenarios": scenarios, "scenarios_kept": kept}
    return fused, inference, warnings


def recommend(
    kb: KnowledgeBase,
    anchor: GarmentEntity,
    profile: PreferenceProfile,
    config: PipelineConfig | None = None,
    policy=None,
    store=None,
    fuser=None,
    session_id: str = "session",
) -> Recommendation:
    """Ranked outfit completions for ``anchor``; raises NoFeasibleOutfit when every branch is pruned."""
    config = config or PipelineConfig()
    if config.retrieval:
        knowledge, inference, warnings = retrieve_knowledge(anchor, kb, profile, config, store, fuser)
        search_profile = profile
    else:
        knowledge, inference, warnings = FusedKnowledge(), {"route": "disabled"}, []
        search_profile = PreferenceProfile(user_id=profile.user_id)
    request = StylingRequest(search_profile, anchor, knowledge, config.search, session_id)
    result = run_tree_search(request, kb, policy)
    weights = adapt_weights(profile, config.rerank_config)
    scored = rerank(result, profile, kb.trends, weights=weights)
    if not config.rerank:
        scored = sorted(scored, key=lambda c: c.rank)
    rec = Recommendation(scored, weights, knowledge, result, inference, warnings=warnings)
    if config.explain:
        rec.report = build_report(rec, request, profile)
    return rec


def build_report(rec: Recommendation, request: StylingRequest, profile: PreferenceProfile) -> ExplanationReport:
    top = rec.top
    summary = {
        "session_id": request.session_id,
        "user_id": profile.user_id,
        "anchor_id": request.anchor.id,
        "alpha": rec.weights.alpha,
        "beta": rec.weights.beta,
        "cold_start": rec.weights.cold_start,
        "attributes": dict(top.path.attributes),
        "final": top.final,
        "preference": top.preference,
        "trend": top.trend,
    }
    cases = [i.ref_id for i in rec.knowledge.items if i.source == "case"]
    return assemble_report(explain_path(top.path, request), cases, profile, summary)
