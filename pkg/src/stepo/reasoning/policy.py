"""Default (non-LLM) decision policy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

from stepo.kb.model import GarmentEntity, KnowledgeBase, SilhouetteSpec
from stepo.principles import PrincipleParams, balance, check_style_partial, classify_harmony, score_silhouette_pair
from stepo.retrieval import length_ratio

SUPPORT_FLOOR = 0.1
SILHOUETTE_TYPES = ("silhouette_pairing", "fit", "length")


@dataclass(frozen=True)
class ActionFactors:
    principle: float
    support: float
    preference: float

    @property
    def raw(self) -> float:
        return self.principle * self.support * self.preference


def outfit_attributes(state: Mapping[str, str], anchor: GarmentEntity, kb: KnowledgeBase) -> dict[str, Any]:
    """Attributes of the partial outfit (anchor plus decisions so far) for style gates."""
    attrs: dict[str, Any] = dict(state)
    formality = [kb.category(anchor.category).formality] if anchor.category in {c.id for c in kb.categories} else []
    tags = set(anchor.tags)
    if "category" in state:
        cat = kb.category(state["category"])
        formality.append(cat.formality)
        tags |= cat.tags
    if formality:
        attrs["formality"] = min(formality)
    attrs["tags"] = frozenset(tags)
    if "color_value" in state:
        attrs["temperature"] = kb.color(state["color_value"]).temperature_or_derived()
    return attrs


def complement_silhouette(state: Mapping[str, str]) -> SilhouetteSpec:
    """Silhouette of the recommended item, with undecided fields at neutral defaults."""
    length = state.get("length", "regular")
    return SilhouetteSpec(
        shape=state.get("silhouette_pairing", "H"),
        fit=state.get("fit", "fit"),
        length_ratio=length_ratio(length),
        length_class=length,
    )


def silhouette_compliance(anchor: GarmentEntity, state: Mapping[str, str], params: PrincipleParams) -> float:
    other = complement_silhouette(state)
    top, bottom = (anchor.silhouette, other) if anchor.role == "top" else (other, anchor.silhouette)
    return 0.5 * (score_silhouette_pair(top, bottom, params).total + balance(top, bottom, params))


def principle_factor(dtype: str, action: str, context, kb: KnowledgeBase, params: PrincipleParams) -> float:
    state = {**context.state, dtype: action}
    anchor = context.anchor
    style = state.get("style")
    gate = 1
    if style is not None:
        gate = check_style_partial(outfit_attributes(state, anchor, kb), kb.constraints_for(style))
    if not gate:
        return 0.0
    if dtype in SILHOUETTE_TYPES:
        return silhouette_compliance(anchor, state, params)
    if dtype == "color_value":
        return classify_harmony(anchor.color, kb.color(action), params).score
    return 1.0


def policy_factors(context, actions, kb: KnowledgeBase, params: PrincipleParams | None = None) -> dict[str, ActionFactors]:
    params = params or kb.principle_params
    dtype = actions.dtype
    out = {}
    for a in actions.actions:
        support = max((i.relevance for i in context.knowledge if i.endorses(dtype, a)), default=0.0)
        freq = context.preferences.get(f"{dtype}={a}", 0.0)
        out[a] = ActionFactors(
            principle=principle_factor(dtype, a, context, kb, params),
            support=max(SUPPORT_FLOOR, support),
            preference=0.5 + 0.5 * freq,
        )
    return out


def normalize(raw: Mapping[str, float], epsilon: float = 1e-6) -> dict[str, float]:
    floored = {a: max(float(v), epsilon) for a, v in raw.items()}
    total = sum(floored.values())
    return {a: v / total for a, v in floored.items()}


def deterministic_policy(context, actions, kb: KnowledgeBase, params: PrincipleParams | None = None, epsilon: float = 1e-6) -> dict[str, float]:
    """Score each action by principle compliance x knowledge support x preference, normalized."""
    factors = policy_factors(context, actions, kb, params)
    return normalize({a: f.raw for a, f in factors.items()}, epsilon)


class DeterministicPolicy:
    def __init__(self, kb: KnowledgeBase, params: PrincipleParams | None = None, epsilon: float = 1e-6) -> None:
        self.kb = kb
        self.params = params or kb.principle_params
        self.epsilon = epsilon

    def __call__(self, context, actions) -> dict[str, float]:
        return deterministic_policy(context, actions, self.kb, self.params, self.epsilon)
