"""Decision-tree search over typed styling decisions."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

from stepo.kb.model import FITS, LENGTH_CLASSES, SHAPES, GarmentEntity, KnowledgeBase, RuleAttribute
from stepo.principles import HARMONY_SCHEMES, classify_harmony, scheme_hue_bounds
from stepo.retrieval import COMPLEMENT, DEFAULT_SCENE_THRESHOLD, FusedKnowledge, KnowledgeItem, PreferenceProfile

log = logging.getLogger(__name__)

DEFAULT_SEQUENCE = (
    "scenario",
    "style",
    "color_scheme",
    "silhouette_pairing",
    "category",
    "color_value",
    "fit",
    "length",
)

DTYPE_SOURCES = {
    "scenario": ("scene_style", "case"),
    "style": ("scene_style", "case"),
    "color_scheme": ("color_rule", "case", "trend"),
    "color_value": ("color_rule", "case", "trend"),
    "silhouette_pairing": ("silhouette_rule", "case"),
    "fit": ("silhouette_rule", "case"),
    "length": ("silhouette_rule", "case"),
    "category": ("case", "preference"),
}

DTYPE_PREFERENCES = {
    "scenario": ("scenario",),
    "style": ("style",),
    "color_scheme": ("color_scheme", "color_value", "temperature"),
    "color_value": ("color_scheme", "color_value", "temperature"),
    "silhouette_pairing": ("silhouette_pairing", "fit", "length"),
    "fit": ("silhouette_pairing", "fit", "length"),
    "length": ("silhouette_pairing", "fit", "length"),
    "category": ("category",),
}


class EmptyActionSpace(LookupError):
    """The KB offers no candidate for a decision (a knowledge gap)."""


class NoFeasibleOutfit(RuntimeError):
    def __init__(self, pruned: list[dict]) -> None:
        self.pruned = pruned
        super().__init__(f"no feasible outfit ({len(pruned)} branches pruned)")


@dataclass(frozen=True)
class SearchConfig:
    beam_width: int = 3
    branching_cap: int = 8
    type_sequence: tuple[str, ...] = DEFAULT_SEQUENCE
    scene_threshold: float = DEFAULT_SCENE_THRESHOLD
    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if self.beam_width < 1 or self.branching_cap < 1:
            raise ValueError("beam width and branching cap must be >= 1")
        if len(set(self.type_sequence)) != len(self.type_sequence) or not self.type_sequence:
            raise ValueError("type sequence must be a nonempty list of unique decision types")

    def next_type(self, dtype: str) -> str | None:
        i = self.type_sequence.index(dtype)
        return self.type_sequence[i + 1] if i + 1 < len(self.type_sequence) else None


@dataclass(frozen=True)
class StylingRequest:
    user: PreferenceProfile
    anchor: GarmentEntity
    knowledge: FusedKnowledge = field(default_factory=FusedKnowledge)
    config: SearchConfig = field(default_factory=SearchConfig)
    session_id: str = "session"


@dataclass(frozen=True)
class PathStep:
    dtype: str
    value: str
    score: float

    @property
    def rationale(self) -> str:
        return f"{self.dtype}={self.value} (p={self.score:.3f})"


@dataclass
class DecisionNode:
    id: str
    dtype: str
    state: dict[str, str]
    chosen: str | None = None
    children: list[str] = field(default_factory=list)
    edge_constraints: tuple[RuleAttribute, ...] = ()
    score: float = 0.0
    scores: dict[str, float] = field(default_factory=dict)
    trail: tuple[PathStep, ...] = ()


@dataclass(frozen=True)
class Context:
    node_id: str
    dtype: str
    path_prefix: tuple[PathStep, ...]
    knowledge: tuple[KnowledgeItem, ...]
    preferences: Mapping[str, float]
    anchor_features: Mapping[str, Any]
    anchor: GarmentEntity
    state: Mapping[str, str]

    def to_wire(self) -> dict:
        return {
            "path": [{"dtype": s.dtype, "value": s.value, "score": s.score} for s in self.path_prefix],
            "knowledge": [i.to_dict() for i in self.knowledge],
            "preferences": dict(self.preferences),
            "anchor": dict(self.anchor_features),
        }


@dataclass(frozen=True)
class ActionSpace:
    dtype: str
    actions: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.actions:
            raise EmptyActionSpace(f"empty action space for {self.dtype}")
        if len(set(self.actions)) != len(self.actions):
            raise ValueError(f"duplicate actions for {self.dtype}")


@dataclass(frozen=True)
class DecisionPath:
    nodes: tuple[DecisionNode, ...]
    attributes: Mapping[str, str]
    path_score: float

    @property
    def descriptors(self) -> tuple[str, ...]:
        return tuple(sorted(f"{k}={v}" for k, v in self.attributes.items()))


def anchor_features(anchor: GarmentEntity) -> dict:
    return {
        "id": anchor.id,
        "category": anchor.category,
        "role": anchor.role,
        "color": anchor.color.name,
        "shape": anchor.silhouette.shape,
        "fit": anchor.silhouette.fit,
        "length": anchor.silhouette.length_class,
        "tags": sorted(anchor.tags),
        "embedding_ref": anchor.embedding_ref,
    }


def root_node(config: SearchConfig) -> DecisionNode:
    return DecisionNode(id="v0", dtype=config.type_sequence[0], state={})


def build_context(node: DecisionNode, request: StylingRequest) -> Context:
    sources = DTYPE_SOURCES.get(node.dtype)
    knowledge = request.knowledge.items if sources is None else request.knowledge.by_source(sources)
    prefs = request.user.slice(DTYPE_PREFERENCES.get(node.dtype, ()))
    trail = node.trail or tuple(PathStep(k, v, float("nan")) for k, v in node.state.items())
    return Context(
        node_id=node.id,
        dtype=node.dtype,
        path_prefix=trail,
        knowledge=tuple(knowledge),
        preferences=prefs,
        anchor_features=anchor_features(request.anchor),
        anchor=request.anchor,
        state=dict(node.state),
    )


def _prior(dtype: str, action: str, knowledge) -> float:
    return max((i.relevance for i in knowledge if i.endorses(dtype, action)), default=0.0)


def candidate_actions(dtype: str, context: Context, kb: KnowledgeBase, scene_threshold: float) -> list[str]:
    """Uncapped candidate values for a decision type, in catalog order."""
    state, anchor = context.state, context.anchor
    if dtype == "scenario":
        return list(kb.matrix.scenarios)
    if dtype == "style":
        sc = state.get("scenario")
        if sc is None:
            return list(kb.matrix.styles)
        return [s for s, v in kb.matrix.row(sc).items() if v >= scene_threshold]
    if dtype == "color_scheme":
        present = {classify_harmony(anchor.color, c, kb.principle_params).scheme for c in kb.palette()}
        return [s for s in HARMONY_SCHEMES if s in present]
    if dtype == "silhouette_pairing":
        return list(SHAPES)
    if dtype == "category":
        roles = COMPLEMENT.get(anchor.role, ())
        return [c.id for c in kb.categories if c.role in roles]
    if dtype == "color_value":
        scheme = state.get("color_scheme")
        out = []
        for c in kb.palette():
            if scheme is None or classify_harmony(anchor.color, c, kb.principle_params).scheme == scheme:
                out.append(c.name)
        return out
    if dtype == "fit":
        return list(FITS)
    if dtype == "length":
        return list(LENGTH_CLASSES)
    raise ValueError(f"unknown decision type {dtype!r}")


def enumerate_actions(dtype: str, context: Context, kb: KnowledgeBase, config: SearchConfig | None = None) -> ActionSpace:
    """Candidate values for ``dtype``, capped by descending prior relevance."""
    config = config or SearchConfig()
    cands = candidate_actions(dtype, context, kb, config.scene_threshold)
    if not cands:
        raise EmptyActionSpace(f"no candidates for {dtype} given {dict(context.state)}")
    order = sorted(range(len(cands)), key=lambda i: (-_prior(dtype, cands[i], context.knowledge), i))
    return ActionSpace(dtype, tuple(cands[i] for i in order[: config.branching_cap]))


def edge_constraints_for(dtype: str, choice: str, kb: KnowledgeBase, config: SearchConfig) -> tuple[RuleAttribute, ...]:
    if dtype == "scenario":
        return (
            RuleAttribute("edge:scenario", "scenario", "=", choice),
            RuleAttribute("edge:scene_compat", "scene_compat", ">=", config.scene_threshold),
        )
    if dtype == "style":
        return (RuleAttribute("edge:style", "style", "=", choice),) + tuple(kb.constraints_for(choice).constraints)
    if dtype == "color_scheme":
        return tuple(scheme_hue_bounds(choice))
    return (RuleAttribute(f"edge:{dtype}", dtype, "=", choice),)


def transition(
    parent: DecisionNode,
    choice: str,
    context: Context,
    kb: KnowledgeBase,
    config: SearchConfig | None = None,
    actions: ActionSpace | None = None,
) -> DecisionNode:
    """Child node reached from ``parent`` by deciding ``choice``."""
    config = config or SearchConfig()
    actions = actions or enumerate_actions(parent.dtype, context, kb, config)
    if choice not in actions.actions:
        raise ValueError(f"{choice!r} is not in the action space of {parent.dtype}: {list(actions.actions)}")
    nxt = config.next_type(parent.dtype)
    child = DecisionNode(
        id=f"{parent.id}/{choice}",
        dtype=nxt or "",
        state={**parent.state, parent.dtype: choice},
        edge_constraints=edge_constraints_for(parent.dtype, choice, kb, config),
        trail=parent.trail + (PathStep(parent.dtype, choice, parent.scores.get(choice, float("nan"))),),
    )
    parent.children.append(child.id)
    return child


Policy = Callable[[Context, ActionSpace], Mapping[str, float]]


class SearchResult(list):
    """Ranked :class:`DecisionPath` list plus the expanded tree and pruning trace."""

    def __init__(self, paths=(), tree=None, pruned=None) -> None:
        super().__init__(paths)
        self.tree: dict[str, DecisionNode] = tree or {}
        self.pruned: list[dict] = pruned or []


def path_score(step_scores) -> float:
    if not step_scores:
        return 1.0
    return math.exp(sum(math.log(max(s, 1e-300)) for s in step_scores) / len(step_scores))


def _rank_key(partial) -> tuple:
    return (-partial["score"], tuple(sorted(f"{k}={v}" for k, v in partial["node"].state.items())))


def run_tree_search(request: StylingRequest, kb: KnowledgeBase, policy: Policy | None = None) -> SearchResult:
    """Beam search across the decision-type sequence.

    Partials are ranked by the geometric mean of their step scores, ties by
    their attribute set; completed paths come back in that order.
    """
    from stepo.reasoning.policy import DeterministicPolicy

    cfg = request.config
    policy = policy or DeterministicPolicy(kb, epsilon=cfg.epsilon)
    root = root_node(cfg)
    tree = {root.id: root}
    pruned: list[dict] = []
    beam = [{"node": root, "nodes": (), "steps": (), "score": 1.0}]
    for depth, dtype in enumerate(cfg.type_sequence):
        expanded = []
        for partial in beam:
            node = partial["node"]
            ctx = build_context(node, request)
            try:
                space = enumerate_actions(dtype, ctx, kb, cfg)
            except EmptyActionSpace as exc:
                pruned.append({"node_id": node.id, "dtype": dtype, "state": dict(node.state), "reason": str(exc)})
                continue
            scores = dict(policy(ctx, space))
            node.scores = scores
            for action in space.actions:
                s = scores[action]
                child = transition(node, action, ctx, kb, cfg, space)
                tree[child.id] = child
                decided = replace(node, chosen=action, score=s, children=list(node.children), scores=dict(scores))
                steps = partial["steps"] + (s,)
                expanded.append(
                    {"node": child, "nodes": partial["nodes"] + (decided,), "steps": steps, "score": path_score(steps)}
                )
        if not expanded:
            raise NoFeasibleOutfit(pruned)
        expanded.sort(key=_rank_key)
        beam = expanded[: cfg.beam_width]
        log.debug("depth %d (%s): %d expanded, kept %d", depth, dtype, len(expanded), len(beam))
    paths = [DecisionPath(p["nodes"], dict(p["node"].state), p["score"]) for p in beam]
    return SearchResult(paths, tree, pruned)
