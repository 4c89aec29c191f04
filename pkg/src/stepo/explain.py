"""Template explanations for decision paths, with decision <-> evidence trace indices."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from stepo.reasoning.tree import Context, DecisionNode, DecisionPath, StylingRequest, build_context
from stepo.retrieval import PreferenceProfile

MAX_EVIDENCE = 3

CHOICE_TEMPLATES = {
    "scenario": "chose the {value} scenario",
    "style": "chose the {value} style",
    "color_scheme": "chose a {value} color scheme",
    "silhouette_pairing": "chose an {value}-type silhouette",
    "category": "chose {value} as the category",
    "color_value": "chose {value}",
    "fit": "chose a {value} fit",
    "length": "chose {value} length",
}

ANCESTOR_NAMES = {
    "scenario": "scenario {value}",
    "style": "style {value}",
    "color_scheme": "{value} scheme",
    "silhouette_pairing": "{value} silhouette",
    "category": "category {value}",
    "color_value": "color {value}",
    "fit": "{value} fit",
    "length": "{value} length",
}


@dataclass(frozen=True)
class NodeExplanation:
    node_id: str
    dtype: str
    chosen: str
    alternatives: tuple[tuple[str, float], ...]
    evidence: tuple[str, ...]
    preference_note: Mapping[str, float]
    rationale_text: str

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "dtype": self.dtype,
            "chosen": self.chosen,
            "alternatives": [[a, s] for a, s in self.alternatives],
            "evidence": list(self.evidence),
            "preference_note": dict(self.preference_note),
            "rationale_text": self.rationale_text,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "NodeExplanation":
        return cls(
            node_id=d["node_id"],
            dtype=d["dtype"],
            chosen=d["chosen"],
            alternatives=tuple((a, float(s)) for a, s in d["alternatives"]),
            evidence=tuple(d["evidence"]),
            preference_note=dict(d["preference_note"]),
            rationale_text=d["rationale_text"],
        )


@dataclass(frozen=True)
class ExplanationReport:
    request: Mapping[str, Any]
    node_explanations: tuple[NodeExplanation, ...]
    related_cases: tuple[str, ...]
    profile: Mapping[str, Any]
    index_forward: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    index_backward: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "request": dict(self.request),
            "node_explanations": [e.to_dict() for e in self.node_explanations],
            "related_cases": list(self.related_cases),
            "profile": dict(self.profile),
            "index_forward": {k: list(v) for k, v in self.index_forward.items()},
            "index_backward": {k: list(v) for k, v in self.index_backward.items()},
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExplanationReport":
        return cls(
            request=dict(d["request"]),
            node_explanations=tuple(NodeExplanation.from_dict(e) for e in d["node_explanations"]),
            related_cases=tuple(d["related_cases"]),
            profile=dict(d["profile"]),
            index_forward={k: tuple(v) for k, v in d["index_forward"].items()},
            index_backward={k: tuple(v) for k, v in d["index_backward"].items()},
        )

    @classmethod
    def from_json(cls, text: str) -> "ExplanationReport":
        return cls.from_dict(json.loads(text))


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _evidence_items(dtype: str, chosen: str, knowledge) -> list:
    hits = [i for i in knowledge if i.endorses(dtype, chosen)]
    hits.sort(key=lambda i: (-i.relevance, i.source, i.ref_id))
    return hits[:MAX_EVIDENCE]


def _ancestors(context: Context) -> str:
    names = [ANCESTOR_NAMES.get(s.dtype, s.dtype + " {value}").format(value=s.value) for s in context.path_prefix]
    if not names:
        return ""
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


def render_rationale(
    dtype: str,
    chosen: str,
    context: Context,
    evidence: Sequence,
    preference: float | None,
    alternatives: Sequence[tuple[str, float]],
) -> str:
    choice = CHOICE_TEMPLATES.get(dtype, dtype + " {value}").format(value=chosen)
    if dtype == "color_value" and "color_scheme" in context.state:
        choice += f" within the {context.state['color_scheme']} scheme"
    ancestors = _ancestors(context)
    head = f"Given {ancestors}, {choice}" if ancestors else choice[0].upper() + choice[1:]
    parts = [head + "."]
    if evidence:
        cites = ", ".join(f"[{i.ref}] ({i.relevance:.2f})" for i in evidence)
        parts.append(f"Supported by {cites}.")
    else:
        parts.append("This is a principle-only decision.")
    if preference:
        parts.append(f"User frequency for {dtype}={chosen} is {preference:.2f}.")
    others = [f"{a} ({s:.3f})" for a, s in alternatives if a != chosen]
    if others:
        parts.append("Alternatives: " + ", ".join(others) + ".")
    return " ".join(parts)


def explain_node(node: DecisionNode, context: Context, scores: Mapping[str, float] | None = None) -> NodeExplanation:
    """Explanation for a node whose choice has been made."""
    if node.chosen is None:
        raise ValueError(f"node {node.id!r} has no choice yet")
    scores = dict(scores if scores is not None else node.scores)
    alternatives = tuple(sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])))
    if node.chosen not in scores:
        alternatives = ((node.chosen, node.score),) + alternatives
    evidence = _evidence_items(node.dtype, node.chosen, context.knowledge)
    prefs = dict(context.preferences)
    pref = prefs.get(f"{node.dtype}={node.chosen}")
    text = render_rationale(node.dtype, node.chosen, context, evidence, pref, alternatives)
    return NodeExplanation(
        node_id=node.id,
        dtype=node.dtype,
        chosen=node.chosen,
        alternatives=alternatives,
        evidence=tuple(i.ref for i in evidence),
        preference_note=prefs,
        rationale_text=text,
    )


def explain_path(path: DecisionPath, request: StylingRequest) -> list[NodeExplanation]:
    return [explain_node(n, build_context(n, request)) for n in path.nodes]


def profile_summary(profile: PreferenceProfile, top: int = 5) -> dict:
    attrs = sorted(profile.attr_freq.items(), key=lambda kv: (-kv[1], kv[0]))[:top]
    return {
        "user_id": profile.user_id,
        "history_size": profile.history_size,
        "cold_start": profile.cold_start,
        "trend_match_rate": profile.trend_match_rate,
        "top_attributes": {k: v for k, v in attrs},
    }


def assemble_report(
    explanations: Iterable[NodeExplanation],
    cases: Iterable[str],
    profile: PreferenceProfile,
    request: Mapping[str, Any] | None = None,
) -> ExplanationReport:
    explanations = tuple(explanations)
    forward = {e.node_id: tuple(e.evidence) for e in explanations}
    backward: dict[str, list[str]] = {}
    for e in explanations:
        for ref in e.evidence:
            backward.setdefault(ref, []).append(e.node_id)
    return ExplanationReport(
        request=dict(request or {}),
        node_explanations=explanations,
        related_cases=tuple(cases),
        profile=profile_summary(profile),
        index_forward=forward,
        index_backward={k: tuple(v) for k, v in sorted(backward.items())},
    )


def trace_query(report: ExplanationReport, query: str) -> frozenset[str]:
    """Evidence refs for a decision id, or decision ids for an evidence ref."""
    if query in report.index_forward:
        return frozenset(report.index_forward[query])
    if query in report.index_backward:
        return frozenset(report.index_backward[query])
    raise KeyError(f"{query!r} not in report")


def render_text(report: ExplanationReport) -> str:
    lines = []
    req = report.request
    if req:
        lines.append("Request: " + ", ".join(f"{k}={req[k]}" for k in sorted(req)))
    p = report.profile
    lines.append(
        f"User {p.get('user_id', '')}: {p.get('history_size', 0)} past outfits, "
        f"trend match rate {p.get('trend_match_rate', 0.0):.2f}" + (" (cold start)" if p.get("cold_start") else "")
    )
    for i, e in enumerate(report.node_explanations, 1):
        lines.append(f"{i}. [{e.dtype}] {e.rationale_text}")
    if report.related_cases:
        lines.append("Related cases: " + ", ".join(report.related_cases))
    return "\n".join(lines) + "\n"
