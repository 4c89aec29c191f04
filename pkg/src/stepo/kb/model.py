"""Metadata-layer data model: garments, colors, silhouettes, semantics, rules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Mapping

SHAPES = ("H", "X", "A", "O", "Y")
FITS = ("tight", "fit", "loose")
LENGTH_CLASSES = ("cropped", "regular", "long")
ROLES = ("top", "bottom", "composite")
TEMPERATURES = ("warm", "cool", "neutral")
SEMANTIC_KINDS = ("style", "scenario")
TREND_KINDS = ("product", "scenario-style", "color", "silhouette")

# chroma below this reads as achromatic regardless of hue
NEUTRAL_CHROMA = 10.0

RULE_OPS = (">=", "<=", "=", "in", "not_in")
_OP_ALIASES = {"≥": ">=", "≤": "<=", "==": "=", "∈": "in", "∉": "not_in", "not in": "not_in"}


def temperature_for(hue_deg: float, chroma: float) -> str:
    """Temperature band of an HCL color.

    warm is [315, 360) U [0, 135), cool is [135, 315); low chroma is neutral.
    """
    if chroma < NEUTRAL_CHROMA:
        return "neutral"
    if hue_deg >= 315.0 or hue_deg < 135.0:
        return "warm"
    return "cool"


def hcl_to_lab(hue_deg: float, chroma: float, lightness: float) -> tuple[float, float, float]:
    """Treat HCL as polar CIE Lab (LCh_ab): a = C cos h, b = C sin h."""
    h = math.radians(hue_deg)
    return (float(lightness), chroma * math.cos(h), chroma * math.sin(h))


def hue_difference(h1: float, h2: float) -> float:
    """Smallest angular distance between two hues on the color wheel, in [0, 180]."""
    for h in (h1, h2):
        if not (0.0 <= h < 360.0) or math.isnan(h):
            raise ValueError(f"hue {h!r} outside [0, 360)")
    d = abs(h1 - h2) % 360.0
    return 360.0 - d if d > 180.0 else d


@dataclass(frozen=True)
class ColorSpec:
    hue_deg: float
    chroma: float
    lightness: float
    lab: tuple[float, float, float] | None = None
    temperature: str | None = None
    name: str = ""

    @classmethod
    def from_hcl(cls, hue_deg: float, chroma: float, lightness: float, name: str = "") -> "ColorSpec":
        return cls(
            hue_deg=float(hue_deg),
            chroma=float(chroma),
            lightness=float(lightness),
            lab=hcl_to_lab(hue_deg, chroma, lightness),
            temperature=temperature_for(hue_deg, chroma),
            name=name,
        )

    @property
    def is_neutral(self) -> bool:
        return self.chroma < NEUTRAL_CHROMA

    def lab_or_derived(self) -> tuple[float, float, float]:
        return self.lab if self.lab is not None else hcl_to_lab(self.hue_deg, self.chroma, self.lightness)

    def temperature_or_derived(self) -> str:
        return self.temperature or temperature_for(self.hue_deg, self.chroma)


@dataclass(frozen=True)
class SilhouetteSpec:
    shape: str
    fit: str
    length_ratio: float = 1.0
    length_class: str = "regular"


@dataclass(frozen=True)
class Category:
    id: str
    role: str
    formality: float = 0.5
    tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class GarmentEntity:
    id: str
    category: str
    role: str
    color: ColorSpec
    silhouette: SilhouetteSpec
    tags: frozenset[str] = frozenset()
    embedding_ref: int | None = None
    name: str = ""

    def descriptors(self) -> frozenset[str]:
        """Free tags plus namespaced ``key=value`` descriptors of the structured fields."""
        out = set(self.tags)
        out.add(f"category={self.category}")
        out.add(f"silhouette_pairing={self.silhouette.shape}")
        out.add(f"fit={self.silhouette.fit}")
        out.add(f"length={self.silhouette.length_class}")
        out.add(f"temperature={self.color.temperature_or_derived()}")
        if self.color.name:
            out.add(f"color_value={self.color.name}")
        return frozenset(out)


@dataclass(frozen=True)
class SemanticEntity:
    id: str
    kind: str
    attribute_signature: frozenset[str] = frozenset()


def normalize_op(op: str) -> str:
    op = _OP_ALIASES.get(op, op)
    if op not in RULE_OPS:
        raise ValueError(f"unknown rule operator {op!r}")
    return op


@dataclass(frozen=True)
class RuleAttribute:
    """One coordination constraint ``lhs op rhs``.

    Numeric ops take a number; ``in``/``not_in`` take a collection. Against a
    set-valued attribute (e.g. tags) ``in`` means "shares a member" and
    ``not_in`` means "disjoint"; ``=`` means "contains".
    """

    id: str
    lhs: str
    op: str
    rhs: Any
    unit: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "op", normalize_op(self.op))
        if isinstance(self.rhs, (list, set, frozenset)):
            object.__setattr__(self, "rhs", tuple(sorted(self.rhs, key=str)))

    def type_error(self) -> str | None:
        if self.op in (">=", "<="):
            if isinstance(self.rhs, bool) or not isinstance(self.rhs, (int, float)):
                return f"operator {self.op} needs a numeric right-hand side"
        elif self.op in ("in", "not_in"):
            if not isinstance(self.rhs, tuple):
                return f"operator {self.op} needs a list right-hand side"
        return None

    def holds(self, value: Any) -> bool:
        op, rhs = self.op, self.rhs
        if isinstance(value, (set, frozenset, list, tuple)):
            members = set(value)
            if op == "in":
                return bool(members & set(rhs))
            if op == "not_in":
                return not (members & set(rhs))
            if op == "=":
                return rhs in members
            raise TypeError(f"rule {self.id}: {op} on set-valued attribute {self.lhs!r}")
        if op == ">=":
            return float(value) >= float(rhs)
        if op == "<=":
            return float(value) <= float(rhs)
        if op == "=":
            return value == rhs
        if op == "in":
            return value in rhs
        return value not in rhs


PAIRING_FAMILIES = {"color": ("color_scheme",), "silhouette": ("silhouette_pairing", "fit", "length")}


@dataclass(frozen=True)
class PairingRule:
    """A retrievable color or silhouette pairing rule; relevance is computed against the anchor."""

    id: str
    family: str
    attribute: str
    value: str


@dataclass(frozen=True)
class TrendEntry:
    id: str
    season: str
    kind: str
    attribute_signature: frozenset[str]
    weight: float


@dataclass(frozen=True)
class ScenarioStyleMatrix:
    scenarios: tuple[str, ...]
    styles: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]

    def value(self, scenario: str, style: str) -> float:
        return self.values[self.scenarios.index(scenario)][self.styles.index(style)]

    def row(self, scenario: str) -> dict[str, float]:
        if scenario not in self.scenarios:
            raise KeyError(f"unknown scenario {scenario!r}")
        return dict(zip(self.styles, self.values[self.scenarios.index(scenario)]))


def frozen_map(d: Mapping | None = None) -> Mapping:
    return MappingProxyType(dict(d or {}))


@dataclass(frozen=True)
class KnowledgeBase:
    """The compiled knowledge store. Build through :func:`stepo.kb.load_kb`."""

    categories: tuple[Category, ...]
    entities: tuple[GarmentEntity, ...]
    semantics: tuple[SemanticEntity, ...]
    rules: tuple[RuleAttribute, ...]
    style_constraints: tuple[Any, ...]  # StyleConstraintSet
    pairing_rules: tuple[Any, ...]  # PairingRule
    principle_params: Any  # PrincipleParams
    graph: Any  # StyleRuleGraph
    graph_config: Any  # GraphConfig
    cases: Any  # CaseLibrary
    trends: tuple[TrendEntry, ...]
    matrix: ScenarioStyleMatrix
    embeddings: Any = None  # EmbeddingStore | None
    _index: Mapping = field(default_factory=frozen_map, repr=False, compare=False)

    def __post_init__(self) -> None:
        index = {
            "entity": {e.id: e for e in self.entities},
            "semantic": {(s.kind, s.id): s for s in self.semantics},
            "category": {c.id: c for c in self.categories},
            "style_constraints": {s.style_id: s for s in self.style_constraints},
            "trend": {t.id: t for t in self.trends},
            "palette": {},
        }
        for e in self.entities:
            if e.color.name and e.color.name not in index["palette"]:
                index["palette"][e.color.name] = e.color
        object.__setattr__(self, "_index", frozen_map(index))

    def entity(self, entity_id: str) -> GarmentEntity:
        try:
            return self._index["entity"][entity_id]
        except KeyError:
            raise KeyError(f"unknown entity {entity_id!r}") from None

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self._index["entity"]

    def category(self, category_id: str) -> Category:
        try:
            return self._index["category"][category_id]
        except KeyError:
            raise KeyError(f"unknown category {category_id!r}") from None

    def semantic(self, semantic_id: str, kind: str = "style") -> SemanticEntity:
        """Semantic entity by id; ids are unique within a kind, so a scenario and a style may share one."""
        try:
            return self._index["semantic"][(kind, semantic_id)]
        except KeyError:
            raise KeyError(f"unknown {kind} {semantic_id!r}") from None

    def styles(self) -> list[SemanticEntity]:
        return [s for s in self.semantics if s.kind == "style"]

    def constraints_for(self, style_id: str):
        """The style's constraint set; an empty set for styles without one."""
        from stepo.principles import StyleConstraintSet

        found = self._index["style_constraints"].get(style_id)
        return found if found is not None else StyleConstraintSet(style_id, ())

    def palette(self) -> list[ColorSpec]:
        """Distinct named colors across the catalog, in first-seen order."""
        return list(self._index["palette"].values())

    def color(self, name: str) -> ColorSpec:
        try:
            return self._index["palette"][name]
        except KeyError:
            raise KeyError(f"unknown palette color {name!r}") from None


def project(entity: GarmentEntity, kb: KnowledgeBase) -> set[SemanticEntity]:
    """Semantic entities whose attribute signature the entity fully satisfies."""
    if not kb.has_entity(entity.id):
        raise KeyError(f"entity {entity.id!r} not in knowledge base")
    return project_descriptors(entity.descriptors(), kb.semantics)


def project_descriptors(descriptors: Iterable[str], semantics: Iterable[SemanticEntity]) -> set[SemanticEntity]:
    have = set(descriptors)
    return {s for s in semantics if s.attribute_signature and s.attribute_signature <= have}
