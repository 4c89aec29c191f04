"""Hybrid knowledge retrieval and deterministic knowledge fusion."""

from __future__ import annotations

import concurrent.futures
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

from stepo.kb.model import GarmentEntity, KnowledgeBase, project_descriptors
from stepo.principles import classify_harmony, golden_ratio_score
from stepo.semantic import nearest_cases

log = logging.getLogger(__name__)

SOURCES = ("case", "scene_style", "color_rule", "silhouette_rule", "preference", "trend")
# conflict tie-break: lower index wins
PRIORITY = {"scene_style": 0, "color_rule": 1, "silhouette_rule": 2, "case": 3, "preference": 4, "trend": 5}
COMPLEMENT = {"top": ("bottom",), "bottom": ("top",), "composite": ("top",)}
LENGTH_RATIOS = {"cropped": 0.85, "regular": 1.0, "long": 1.2}
DEFAULT_SCENE_THRESHOLD = 0.6
# dtype prefixes used for namespaced descriptors
ATTRIBUTE_KEYS = ("scenario", "style", "color_scheme", "silhouette_pairing", "category", "color_value", "fit", "length")


@dataclass(frozen=True, eq=True)
class KnowledgeItem:
    source: str
    ref_id: str
    payload: Mapping[str, Any]
    relevance: float

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ValueError(f"unknown knowledge source {self.source!r}")

    def __hash__(self) -> int:
        return hash(self.key)

    @property
    def key(self) -> tuple[str, str]:
        return (self.source, self.ref_id)

    @property
    def ref(self) -> str:
        return f"{self.source}:{self.ref_id}"

    def endorses(self, dtype: str, value: str) -> bool:
        return value in self.payload.get("endorses", {}).get(dtype, ())

    def to_dict(self) -> dict:
        return {"source": self.source, "ref_id": self.ref_id, "payload": _plain(self.payload), "relevance": self.relevance}


def _plain(x: Any) -> Any:
    if isinstance(x, Mapping):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = [_plain(v) for v in x]
        return sorted(items, key=str) if isinstance(x, (set, frozenset)) else items
    return x


class ItemList(list):
    """List of knowledge items carrying a retrieval warning, if any."""

    warning: str | None = None


@dataclass(frozen=True)
class FusedKnowledge:
    items: tuple[KnowledgeItem, ...] = ()
    conflicts: tuple[tuple[KnowledgeItem, KnowledgeItem, str], ...] = ()
    fallback: bool = False

    def by_source(self, sources: Iterable[str]) -> tuple[KnowledgeItem, ...]:
        wanted = set(sources)
        return tuple(i for i in self.items if i.source in wanted)

    def find(self, ref: str) -> KnowledgeItem | None:
        for i in self.items:
            if i.ref == ref:
                return i
        return None


@dataclass(frozen=True)
class PreferenceProfile:
    user_id: str = ""
    attr_freq: Mapping[str, float] = field(default_factory=dict)
    style_freq: Mapping[str, float] = field(default_factory=dict)
    trend_match_rate: float = 0.0
    history_size: int = 0

    @property
    def cold_start(self) -> bool:
        return self.history_size == 0

    def frequency(self, dtype: str, value: str) -> float:
        if dtype == "style":
            return self.style_freq.get(value, 0.0)
        return self.attr_freq.get(f"{dtype}={value}", 0.0)

    def slice(self, keys: Iterable[str]) -> dict[str, float]:
        """Frequencies for the given attribute families (``style`` reads style_freq)."""
        out = {}
        for key in keys:
            if key == "style":
                out.update({f"style={s}": v for s, v in self.style_freq.items()})
            else:
                out.update({d: v for d, v in self.attr_freq.items() if d.startswith(key + "=")})
        return dict(sorted(out.items()))


def cosine_relevance(cos: float) -> float:
    return min(1.0, max(0.0, (cos + 1.0) / 2.0))


def length_ratio(length_class: str) -> float:
    return LENGTH_RATIOS[length_class]


def _scenario_of_style(style: str, kb: KnowledgeBase) -> str | None:
    m = kb.matrix
    if style not in m.styles:
        return None
    col = [row[m.styles.index(style)] for row in m.values]
    best = max(range(len(col)), key=lambda i: (col[i], -i))
    return m.scenarios[best]


def case_endorsements(case, anchor: GarmentEntity, kb: KnowledgeBase) -> dict[str, list[str]]:
    """Attribute values a case supports for the item complementing ``anchor``."""
    thr = kb.graph_config.activation_threshold
    items = [kb.entity(i) for i in case.item_ids if kb.has_entity(i)]
    comp = [e for e in items if e.role in COMPLEMENT.get(anchor.role, ())]
    out: dict[str, set] = {k: set() for k in ATTRIBUTE_KEYS}
    for e in comp:
        out["category"].add(e.category)
        if e.color.name:
            out["color_value"].add(e.color.name)
        out["silhouette_pairing"].add(e.silhouette.shape)
        out["fit"].add(e.silhouette.fit)
        out["length"].add(e.silhouette.length_class)
    styles = [s for s, v in case.style_vector.items() if v >= thr]
    out["style"].update(styles)
    for s in styles:
        sc = _scenario_of_style(s, kb)
        if sc:
            out["scenario"].add(sc)
    tops = [e for e in items if e.role == "top"]
    bottoms = [e for e in items if e.role == "bottom"]
    if tops and bottoms:
        out["color_scheme"].add(classify_harmony(tops[0].color, bottoms[0].color, kb.principle_params).scheme)
    return {k: sorted(v) for k, v in out.items() if v}


def anchor_vector(anchor: GarmentEntity, kb: KnowledgeBase, store=None):
    store = store if store is not None else kb.embeddings
    if anchor.embedding_ref is None or store is None:
        return None
    return store[anchor.embedding_ref]


def retrieve_typical_outfits(anchor: GarmentEntity, kb: KnowledgeBase, k: int = 5, store=None) -> ItemList:
    """Nearest outfit cases to the anchor's embedding, as case knowledge items.

    ``store`` holds the anchor's vector when it lives outside the KB store
    (e.g. dataset items); cases are always looked up in the KB store.
    """
    out = ItemList()
    query = anchor_vector(anchor, kb, store)
    if query is None or kb.embeddings is None or len(kb.cases) == 0:
        out.warning = f"anchor {anchor.id!r} has no embedding; typical-outfit retrieval skipped"
        log.warning(out.warning)
        return out
    for case_id, cos in nearest_cases(query, kb.cases, kb.embeddings, k):
        case = kb.cases[case_id]
        payload = {"endorses": case_endorsements(case, anchor, kb), "text": case.text, "cosine": cos}
        out.append(KnowledgeItem("case", case_id, payload, cosine_relevance(cos)))
    return out


def retrieve_scene_style(
    scenario: str,
    style_candidates: Iterable[str] | None,
    kb: KnowledgeBase,
    threshold: float = DEFAULT_SCENE_THRESHOLD,
) -> list[KnowledgeItem]:
    row = kb.matrix.row(scenario)
    allowed = set(style_candidates) if style_candidates is not None else None
    out = []
    for style, value in row.items():
        if value < threshold or (allowed is not None and style not in allowed):
            continue
        constraints = [c.id for c in kb.constraints_for(style).constraints]
        payload = {"endorses": {"scenario": [scenario], "style": [style]}, "constraints": constraints}
        out.append(KnowledgeItem("scene_style", f"{scenario}/{style}", payload, float(value)))
    return out


def retrieve_pairing_rules(anchor: GarmentEntity, kb: KnowledgeBase) -> list[KnowledgeItem]:
    params = kb.principle_params
    is_top = anchor.role == "top"
    palette = kb.palette()
    harmonies = {c.name: classify_harmony(anchor.color, c, params) for c in palette}
    out = []
    for rule in kb.pairing_rules:
        if rule.family == "color":
            members = sorted(n for n, h in harmonies.items() if h.scheme == rule.value)
            if not members:
                continue
            rel = max(harmonies[n].score for n in members)
            payload = {"endorses": {"color_scheme": [rule.value], "color_value": members}}
            out.append(KnowledgeItem("color_rule", rule.id, payload, rel))
            continue
        a = anchor.silhouette
        if rule.attribute == "silhouette_pairing":
            rel = params.shape_pair(a.shape, rule.value) if is_top else params.shape_pair(rule.value, a.shape)
        elif rule.attribute == "fit":
            rel = params.fit_pair(a.fit, rule.value) if is_top else params.fit_pair(rule.value, a.fit)
        else:
            other = length_ratio(rule.value)
            split = a.length_ratio / (a.length_ratio + other) if is_top else other / (other + a.length_ratio)
            rel = golden_ratio_score(split, params.golden_sigma)
        out.append(KnowledgeItem("silhouette_rule", rule.id, {"endorses": {rule.attribute: [rule.value]}}, rel))
    return out


def outfit_descriptors(items: Sequence[GarmentEntity], kb: KnowledgeBase) -> set[str]:
    """Descriptors of a whole outfit: item descriptors, projected styles, top/bottom color scheme."""
    out: set[str] = set()
    for e in items:
        d = e.descriptors()
        out |= d
        out |= {f"style={s.id}" for s in project_descriptors(d, kb.semantics) if s.kind == "style"}
    tops = [e for e in items if e.role == "top"]
    bottoms = [e for e in items if e.role == "bottom"]
    if tops and bottoms:
        out.add(f"color_scheme={classify_harmony(tops[0].color, bottoms[0].color, kb.principle_params).scheme}")
    return out


def active_trend_descriptors(trends) -> set[str]:
    return {d for t in trends for d in t.attribute_signature}


def user_preference_stats(
    history: Sequence[Sequence[Any]],
    kb: KnowledgeBase,
    user_id: str = "",
    items: Mapping[str, GarmentEntity] | None = None,
    trends=None,
) -> PreferenceProfile:
    """Per-attribute and per-style occurrence fractions over a user's outfits.

    Outfits are sequences of entities or entity ids; ids resolve against
    ``items`` first, then the KB.
    """
    n = len(history)
    if n == 0:
        return PreferenceProfile(user_id=user_id)
    trend_desc = active_trend_descriptors(kb.trends if trends is None else trends)
    attr, style = Counter(), Counter()
    trend_hits = 0
    for outfit in history:
        resolved = [_resolve(x, kb, items) for x in outfit]
        desc = outfit_descriptors(resolved, kb)
        for d in desc:
            if d.startswith("style="):
                style[d[6:]] += 1
            else:
                attr[d] += 1
        if desc & trend_desc:
            trend_hits += 1
    return PreferenceProfile(
        user_id=user_id,
        attr_freq={d: c / n for d, c in sorted(attr.items())},
        style_freq={s: c / n for s, c in sorted(style.items())},
        trend_match_rate=trend_hits / n,
        history_size=n,
    )


def _resolve(x: Any, kb: KnowledgeBase, items: Mapping[str, GarmentEntity] | None) -> GarmentEntity:
    if isinstance(x, GarmentEntity):
        return x
    if items is not None and x in items:
        return items[x]
    return kb.entity(x)


def preference_items(profile: PreferenceProfile) -> list[KnowledgeItem]:
    out = []
    for desc, freq in profile.attr_freq.items():
        key, _, value = desc.partition("=")
        if value and key in ATTRIBUTE_KEYS and freq > 0:
            out.append(KnowledgeItem("preference", f"{profile.user_id}:{desc}", {"endorses": {key: [value]}}, freq))
    for s, freq in profile.style_freq.items():
        if freq > 0:
            out.append(KnowledgeItem("preference", f"{profile.user_id}:style={s}", {"endorses": {"style": [s]}}, freq))
    return out


def trend_items(trends) -> list[KnowledgeItem]:
    out = []
    for t in trends:
        endorses: dict[str, list[str]] = {}
        for d in sorted(t.attribute_signature):
            key, _, value = d.partition("=")
            if value and key in ATTRIBUTE_KEYS:
                endorses.setdefault(key, []).append(value)
        out.append(KnowledgeItem("trend", t.id, {"endorses": endorses, "season": t.season, "kind": t.kind}, t.weight))
    return out


# -- fusion -------------------------------------------------------------------------


def _conflict(a: KnowledgeItem, b: KnowledgeItem) -> str | None:
    ra, rb = a.payload.get("requires", {}), b.payload.get("requires", {})
    for attr in sorted(set(ra) & set(rb)):
        if not set(ra[attr]) & set(rb[attr]):
            return f"{attr}: {sorted(ra[attr])} vs {sorted(rb[attr])}"
    return None


def _order(item: KnowledgeItem) -> tuple:
    return (PRIORITY[item.source], -item.relevance, item.ref_id)


def deterministic_fuse(bundles: Iterable[Iterable[KnowledgeItem] | FusedKnowledge]) -> FusedKnowledge:
    """Deduplicate by (source, ref_id) keeping max relevance, then drop conflict losers."""
    best: dict[tuple[str, str], KnowledgeItem] = {}
    carried: list[tuple[KnowledgeItem, KnowledgeItem, str]] = []
    for bundle in bundles:
        if isinstance(bundle, FusedKnowledge):
            carried.extend(c for c in bundle.conflicts if c not in carried)
            bundle = bundle.items
        for item in bundle:
            cur = best.get(item.key)
            if cur is None or item.relevance > cur.relevance:
                best[item.key] = item
    kept: list[KnowledgeItem] = []
    conflicts = list(carried)
    for item in sorted(best.values(), key=lambda i: (-i.relevance, PRIORITY[i.source], i.ref_id)):
        for other in kept:
            reason = _conflict(other, item)
            if reason is not None:
                record = (other, item, reason)
                if record not in conflicts:
                    conflicts.append(record)
                break
        else:
            kept.append(item)
    return FusedKnowledge(tuple(sorted(kept, key=_order)), tuple(conflicts))


Fuser = Callable[[list[KnowledgeItem]], FusedKnowledge]


def fuse_knowledge(
    bundles: Iterable[Iterable[KnowledgeItem] | FusedKnowledge],
    fuser: Fuser | None = None,
    timeout: float | None = 30.0,
) -> FusedKnowledge:
    """Fuse retrieved bundles; an external ``fuser`` that fails or times out falls back to the default."""
    bundles = list(bundles)
    if fuser is None:
        return deterministic_fuse(bundles)
    flat = [i for b in bundles for i in (b.items if isinstance(b, FusedKnowledge) else b)]
    pool = concurrent.futures.ThreadPoolExecutor(max_workers=1)
    try:
        result = pool.submit(fuser, flat).result(timeout=timeout)
        if not isinstance(result, FusedKnowledge):
            raise TypeError(f"fuser returned {type(result).__name__}")
        return result
    except Exception as exc:  # noqa: BLE001 - any fuser failure degrades to the default
        log.warning("external fuser failed (%s); using deterministic fusion", exc)
        fused = deterministic_fuse(bundles)
        return FusedKnowledge(fused.items, fused.conflicts, fallback=True)
    finally:
        pool.shutdown(wait=False)
