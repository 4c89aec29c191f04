"""Benchmark runs: per-sample recommendation, item materialization, metrics, JSON reports."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

from stepo.evaluation.dataset import Dataset
from stepo.evaluation.metrics import RankedList, mean_average_precision, recall_at_k
from stepo.kb.model import GarmentEntity, KnowledgeBase
from stepo.pipeline import CONFIGS, PipelineConfig, recommend
from stepo.principles import check_style, classify_harmony, score_color_pair, score_silhouette_pair
from stepo.retrieval import COMPLEMENT, user_preference_stats

log = logging.getLogger(__name__)

DEFAULT_KS = (1, 3, 5, 10)


def item_descriptors(item: GarmentEntity, anchor: GarmentEntity | None = None, kb: KnowledgeBase | None = None) -> set[str]:
    """An item's descriptors, plus its color scheme against the anchor when both are known."""
    out = set(item.descriptors())
    if anchor is not None and kb is not None:
        out.add(f"color_scheme={classify_harmony(anchor.color, item.color, kb.principle_params).scheme}")
    return out


def match_fraction(attributes: Mapping[str, str], descriptors: set[str]) -> float:
    if not attributes:
        return 0.0
    return sum(1 for k, v in attributes.items() if f"{k}={v}" in descriptors) / len(attributes)


def materialize_candidates(
    attributes: Mapping[str, str],
    pool: Sequence[GarmentEntity],
    n: int,
    describe: Callable[[GarmentEntity], set[str]] | None = None,
) -> list[tuple[str, float]]:
    """Pool items ranked by the share of ``attributes`` they match; ties by item id."""
    if not pool:
        raise ValueError("empty candidate pool")
    describe = describe or (lambda e: set(e.descriptors()))
    scored = [(e.id, match_fraction(attributes, describe(e))) for e in pool]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:n]


def materialize_paths(
    paths: Sequence[Mapping[str, str]],
    pool: Sequence[GarmentEntity],
    n: int,
    describe: Callable[[GarmentEntity], set[str]] | None = None,
) -> list[str]:
    """Rank items by match against the first path, breaking ties with later paths, then by id."""
    if not pool:
        raise ValueError("empty candidate pool")
    describe = describe or (lambda e: set(e.descriptors()))
    keyed = []
    for e in pool:
        d = describe(e)
        keyed.append((tuple(-match_fraction(p, d) for p in paths), e.id))
    keyed.sort()
    return [i for _, i in keyed[:n]]


def compatibility_hook(
    top: GarmentEntity,
    bottom: GarmentEntity,
    kb: KnowledgeBase,
    style: str | None = None,
    attributes: Mapping | None = None,
    impl: Callable | None = None,
) -> float:
    """Pair compatibility in [0, 1]; default is the mean of silhouette and color scores, gated by the style."""
    if impl is not None:
        return float(impl(top, bottom, kb))
    params = kb.principle_params
    if style is not None:
        attrs = attributes if attributes is not None else pair_attributes(top, bottom, kb)
        if not check_style(attrs, kb.constraints_for(style)):
            return 0.0
    sil = score_silhouette_pair(top.silhouette, bottom.silhouette, params).total
    col = score_color_pair(top.color, bottom.color, params).total
    return 0.5 * (sil + col)


def pair_attributes(top: GarmentEntity, bottom: GarmentEntity, kb: KnowledgeBase) -> dict:
    cats = {c.id: c for c in kb.categories}
    form = [cats[e.category].formality for e in (top, bottom) if e.category in cats]
    return {
        "formality": min(form) if form else 0.0,
        "tags": frozenset(top.tags | bottom.tags),
        "temperature": top.color.temperature_or_derived(),
    }


@dataclass(frozen=True)
class Sample:
    user_id: str
    outfit_id: str
    anchor_id: str
    truth: tuple[str, ...]


@dataclass
class EvalReport:
    config: str
    n_samples: int
    recall: dict[int, float]
    map_standard: float
    map_paper_literal: float
    failures: list[dict] = field(default_factory=list)
    samples: list[dict] = field(default_factory=list)

    def to_dict(self, include_samples: bool = False) -> dict:
        out = {
            "config": self.config,
            "n_samples": self.n_samples,
            "recall": {str(k): v for k, v in sorted(self.recall.items())},
            "map_standard": self.map_standard,
            "map_paper_literal": self.map_paper_literal,
            "failures": self.failures,
        }
        if include_samples:
            out["samples"] = self.samples
        return out

    def to_json(self, include_samples: bool = False) -> str:
        return json.dumps(self.to_dict(include_samples), sort_keys=True, indent=2) + "\n"


def held_out_samples(dataset: Dataset) -> list[Sample]:
    """One sample per held-out outfit: the bottom is the anchor, the tops are the truth."""
    items = dataset.items
    out = []
    for u in dataset.users:
        for o in u.test:
            bottom = next(i for i in o.item_ids if items[i].role == "bottom")
            tops = tuple(sorted(i for i in o.item_ids if items[i].role == "top"))
            out.append(Sample(u.user_id, o.outfit_id, bottom, tops))
    return out


def run_config(
    dataset: Dataset,
    kb: KnowledgeBase,
    name: str,
    config: PipelineConfig,
    ks: Iterable[int] = DEFAULT_KS,
    n_candidates: int | None = None,
    policy=None,
) -> EvalReport:
    ks = sorted(set(ks))
    items = dataset.items
    n = n_candidates or max(ks)
    config = replace(config, explain=False)
    profiles = {
        u.user_id: user_preference_stats([o.item_ids for o in u.train], kb, u.user_id, items) for u in dataset.users
    }
    lists, failures, samples = [], [], []
    for s in held_out_samples(dataset):
        anchor = items[s.anchor_id]
        try:
            rec = recommend(kb, anchor, profiles[s.user_id], config, policy=policy, store=dataset.embeddings)
        except Exception as exc:  # noqa: BLE001 - a failing sample is recorded, not fatal
            failures.append({"user_id": s.user_id, "outfit_id": s.outfit_id, "error": f"{type(exc).__name__}: {exc}"})
            continue
        roles = COMPLEMENT.get(anchor.role, ())
        pool = [e for e in dataset.item_pool if e.role in roles]
        ranked = materialize_paths(
            [c.path.attributes for c in rec.candidates], pool, n, lambda e: item_descriptors(e, anchor, kb)
        )
        lists.append(RankedList.of(ranked, s.truth))
        samples.append({"user_id": s.user_id, "outfit_id": s.outfit_id, "ranked": ranked, "truth": list(s.truth)})
    if not lists:
        raise RuntimeError(f"config {name!r}: every sample failed")
    return EvalReport(
        config=name,
        n_samples=len(lists),
        recall={k: recall_at_k(lists, k) for k in ks},
        map_standard=mean_average_precision(lists, "standard"),
        map_paper_literal=mean_average_precision(lists, "paper_literal"),
        failures=failures,
        samples=samples,
    )


def run_benchmark(
    dataset: Dataset,
    kb: KnowledgeBase,
    configs: Sequence[str] | Mapping[str, PipelineConfig] = ("full",),
    ks: Iterable[int] = DEFAULT_KS,
    n_candidates: int | None = None,
    policy=None,
    base: PipelineConfig | None = None,
) -> dict[str, EvalReport]:
    """Evaluate each named configuration; ``base`` supplies search and rerank settings for named ablations."""
    if not isinstance(configs, Mapping):
        unknown = [c for c in configs if c not in CONFIGS]
        if unknown:
            raise ValueError(f"unknown configs {unknown}; choose from {sorted(CONFIGS)}")
        base = base or PipelineConfig()
        configs = {c: replace(base, retrieval=CONFIGS[c].retrieval, rerank=CONFIGS[c].rerank) for c in configs}
    return {name: run_config(dataset, kb, name, cfg, ks, n_candidates, policy) for name, cfg in configs.items()}
