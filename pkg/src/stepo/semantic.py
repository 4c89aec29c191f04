"""Semantic layer: style-rule bipartite graph, case library, style inference."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_LAMBDA = 0.5
DEFAULT_ACTIVATION = 0.5


class NoEvidenceError(ValueError):
    """The principle vector touches no weighted edge, so no style is supported."""


@dataclass(frozen=True)
class StyleRuleGraph:
    style_vertices: tuple[str, ...]
    principle_vertices: tuple[str, ...]
    edges: Mapping[tuple[str, str], float]
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", MappingProxyType(dict(self.edges)))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, StyleRuleGraph)
            and (self.style_vertices, self.principle_vertices, self.lam) == (other.style_vertices, other.principle_vertices, other.lam)
            and dict(self.edges) == dict(other.edges)
        )

    def __hash__(self) -> int:
        return hash((self.style_vertices, self.principle_vertices, self.lam))


@dataclass(frozen=True)
class GraphConfig:
    """Contents of ``graph.json``: lambda, raw strengths, activation threshold, principle catalog."""

    lam: float = DEFAULT_LAMBDA
    strengths: Mapping[tuple[str, str], float] = field(default_factory=dict)
    activation_threshold: float = DEFAULT_ACTIVATION
    principles: tuple[str, ...] = ()

    def __hash__(self) -> int:
        return hash((self.lam, self.activation_threshold, self.principles))


@dataclass(frozen=True)
class Case:
    id: str
    embedding_ref: int | None
    text: str
    style_vector: Mapping[str, float]
    principle_vector: Mapping[str, float]
    item_ids: tuple[str, ...]

    def __hash__(self) -> int:
        return hash(self.id)


class CaseLibrary:
    def __init__(self, cases: Iterable[Case] = ()) -> None:
        self.cases = tuple(cases)
        self.index = MappingProxyType({c.id: c for c in self.cases})
        if len(self.index) != len(self.cases):
            dupes = sorted({c.id for c in self.cases if sum(1 for d in self.cases if d.id == c.id) > 1})
            raise ValueError(f"duplicate case ids: {dupes}")

    def __len__(self) -> int:
        return len(self.cases)

    def __iter__(self):
        return iter(self.cases)

    def __getitem__(self, case_id: str) -> Case:
        return self.index[case_id]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CaseLibrary) and self.cases == other.cases

    def __repr__(self) -> str:
        return f"CaseLibrary({len(self)} cases)"


def _unit(x: float, name: str) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name}={x!r} outside [0, 1]")
    return x


def edge_weight(freq: float, strength: float, lam: float) -> float:
    """Blend of case frequency and normalized constraint strength."""
    _unit(freq, "freq"), _unit(strength, "strength"), _unit(lam, "lambda")
    return lam * freq + (1.0 - lam) * strength


def build_graph(
    cases: CaseLibrary,
    strengths: Mapping[tuple[str, str], float],
    lam: float = DEFAULT_LAMBDA,
    activation_threshold: float = DEFAULT_ACTIVATION,
    principles: Sequence[str] = (),
) -> StyleRuleGraph:
    """Style-rule graph from case statistics and curated strengths.

    A term with no data (style without cases, pair without a strength entry)
    is missing rather than zero: the edge uses the other term alone, and a
    pair with neither is omitted.
    """
    _unit(lam, "lambda")
    peak = max(strengths.values(), default=0.0)
    norm = {k: (v / peak if peak > 0 else 0.0) for k, v in strengths.items()}

    members: dict[str, list[Case]] = defaultdict(list)
    for case in cases:
        for s, level in case.style_vector.items():
            if level >= activation_threshold:
                members[s].append(case)

    principle_set = set(principles)
    style_set = set(members)
    for s, p in strengths:
        style_set.add(s)
        principle_set.add(p)
    for case in cases:
        principle_set.update(case.principle_vector)

    edges: dict[tuple[str, str], float] = {}
    for s in sorted(style_set):
        for p in sorted(principle_set):
            freq = None
            if members.get(s):
                hits = sum(1 for c in members[s] if c.principle_vector.get(p, 0.0) >= activation_threshold)
                freq = hits / len(members[s])
            strength = norm.get((s, p))
            if freq is None and strength is None:
                continue
            if strength is None:
                w = freq
            elif freq is None:
                w = strength
            else:
                w = edge_weight(freq, strength, lam)
            if w > 0:
                edges[(s, p)] = w
    return StyleRuleGraph(tuple(sorted(style_set)), tuple(sorted(principle_set)), edges, lam)


def infer_styles(graph: StyleRuleGraph, p_vec: Mapping[str, float]) -> dict[str, float]:
    """Posterior over styles given principle activations (edge-weighted evidence, normalized)."""
    evidence = {s: 0.0 for s in graph.style_vertices}
    for (s, p), w in graph.edges.items():
        evidence[s] += w * float(p_vec.get(p, 0.0))
    total = sum(evidence.values())
    if not total > 0:
        raise NoEvidenceError("no evidence: principle vector activates no weighted edge")
    return {s: v / total for s, v in evidence.items()}


def infer_scenarios(style_dist: Mapping[str, float], matrix) -> dict[str, float]:
    """Expected scenario compatibility under a style distribution."""
    out = {}
    for sc in matrix.scenarios:
        row = matrix.row(sc)
        out[sc] = sum(p * row.get(s, 0.0) for s, p in style_dist.items())
    return out


def cosine_scores(query, matrix) -> np.ndarray:
    q = np.asarray(query, dtype=np.float64)
    m = np.asarray(matrix, dtype=np.float64)
    qn = np.linalg.norm(q)
    mn = np.linalg.norm(m, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = (m @ q) / (mn * qn)
    return np.nan_to_num(sims, nan=0.0)


def nearest_cases(query, lib: CaseLibrary, store, k: int) -> list[tuple[str, float]]:
    """Top-k cases by cosine similarity of their embeddings; ties by case id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cases = [c for c in lib if c.embedding_ref is not None]
    if not cases:
        raise ValueError("case library is empty")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (store.dim,):
        raise ValueError(f"query dimension {query.shape} does not match store dimension {store.dim}")
    sims = cosine_scores(query, store.vectors[[c.embedding_ref for c in cases]])
    ranked = sorted(zip((c.id for c in cases), sims.tolist()), key=lambda t: (-t[1], t[0]))
    return ranked[:k]
