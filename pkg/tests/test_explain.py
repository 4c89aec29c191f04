import re

import pytest

from stepo.explain import (
    ExplanationReport,
    NodeExplanation,
    assemble_report,
    explain_node,
    explain_path,
    render_text,
    trace_query,
)
from stepo.pipeline import recommend
from stepo.reasoning import Context, DecisionNode, StylingRequest, build_context
from stepo.reasoning.tree import PathStep
from stepo.retrieval import KnowledgeItem, PreferenceProfile

from conftest import ANCHOR

CITE = re.compile(r"\[([^\]]+)\]")


@pytest.fixture(scope="module")
def persona_rec(sample_kb, persona_profile):
    return recommend(sample_kb, sample_kb.entity(ANCHOR), persona_profile, session_id="t")


def hand_context(anchor, prefix, knowledge=(), prefs=None, dtype="silhouette_pairing"):
    state = {d: v for d, v in prefix}
    return Context("v0/x/y", dtype, tuple(PathStep(d, v, 0.5) for d, v in prefix), tuple(knowledge), prefs or {}, {}, anchor, state)


def test_depth_two_golden_text(sample_kb):
    rule = KnowledgeItem("silhouette_rule", "shape_A", {"endorses": {"silhouette_pairing": ["A"]}}, 0.9)
    ctx = hand_context(sample_kb.entity(ANCHOR), [("scenario", "business"), ("style", "classic")], [rule], {"silhouette_pairing=A": 0.5})
    node = DecisionNode("v0/business/classic", "silhouette_pairing", dict(ctx.state), chosen="A", score=0.6)
    e = explain_node(node, ctx, {"A": 0.6, "H": 0.3, "X": 0.1})
    assert e.rationale_text == (
        "Given scenario business and style classic, chose an A-type silhouette. "
        "Supported by [silhouette_rule:shape_A] (0.90). "
        "User frequency for silhouette_pairing=A is 0.50. "
        "Alternatives: H (0.300), X (0.100)."
    )
    assert e.evidence == ("silhouette_rule:shape_A",)
    assert e.alternatives[0] == ("A", 0.6)


def test_no_evidence_is_principle_only(sample_kb):
    ctx = hand_context(sample_kb.entity(ANCHOR), [], dtype="fit")
    e = explain_node(DecisionNode("v0", "fit", {}, chosen="loose"), ctx, {"loose": 1.0})
    assert e.rationale_text == "Chose a loose fit. This is a principle-only decision."
    assert e.evidence == ()


def test_evidence_capped_at_three_by_relevance(sample_kb):
    items = [KnowledgeItem("case", f"c{i}", {"endorses": {"fit": ["loose"]}}, r) for i, r in enumerate((0.2, 0.9, 0.5, 0.7))]
    ctx = hand_context(sample_kb.entity(ANCHOR), [], items, dtype="fit")
    e = explain_node(DecisionNode("v0", "fit", {}, chosen="loose"), ctx, {"loose": 1.0})
    assert e.evidence == ("case:c1", "case:c3", "case:c2")


def test_unchosen_node_rejected(sample_kb):
    with pytest.raises(ValueError):
        explain_node(DecisionNode("v0", "fit", {}), hand_context(sample_kb.entity(ANCHOR), [], dtype="fit"))


def test_color_value_cites_color_rule_and_scheme(persona_rec, sample_kb):
    top = persona_rec.top.path
    node = next(n for n in top.nodes if n.dtype == "color_value")
    e = next(x for x in persona_rec.report.node_explanations if x.node_id == node.id)
    assert any(ref.startswith("color_rule:") for ref in e.evidence)
    assert f"within the {top.attributes['color_scheme']} scheme" in e.rationale_text


def explanation(node_id, evidence):
    return NodeExplanation(node_id, "fit", "loose", (("loose", 1.0),), tuple(evidence), {}, "")


def test_report_indices_for_multi_cited_evidence():
    exps = [explanation("v0", ["case:c1", "trend:t"]), explanation("v0/a", ["case:c1"]), explanation("v0/a/b", [])]
    report = assemble_report(exps, [], PreferenceProfile())
    assert [e.node_id for e in report.node_explanations] == ["v0", "v0/a", "v0/a/b"]
    assert report.related_cases == ()
    assert trace_query(report, "case:c1") == {"v0", "v0/a"}
    assert trace_query(report, "v0") == {"case:c1", "trend:t"}
    assert trace_query(report, "v0/a/b") == frozenset()
    with pytest.raises(KeyError, match="not in report"):
        trace_query(report, "trend:nowhere")


def assert_inverse(report):
    for d, refs in report.index_forward.items():
        for r in refs:
            assert d in report.index_backward[r]
    for r, ds in report.index_backward.items():
        for d in ds:
            assert r in report.index_forward[d]
    for d in report.index_forward:
        for r in trace_query(report, d):
            assert d in trace_query(report, r)


def test_persona_report_is_sound(persona_rec):
    report = persona_rec.report
    assert len(report.node_explanations) == len(persona_rec.top.path.nodes)
    for e in report.node_explanations:
        assert set(CITE.findall(e.rationale_text)) <= set(e.evidence)
        assert e.chosen in {a for a, _ in e.alternatives}
    assert_inverse(report)


def test_every_candidate_path_explains_soundly(persona_rec, sample_kb, persona_profile):
    req = StylingRequest(persona_profile, sample_kb.entity(ANCHOR), persona_rec.knowledge)
    for cand in persona_rec.candidates:
        exps = explain_path(cand.path, req)
        for e, n in zip(exps, cand.path.nodes):
            assert set(CITE.findall(e.rationale_text)) <= set(e.evidence)
            ctx = build_context(n, req)
            known = {i.ref for i in ctx.knowledge}
            assert set(e.evidence) <= known
        assert_inverse(assemble_report(exps, [], persona_profile))


def test_report_json_round_trip_and_determinism(persona_rec, sample_kb, persona_profile):
    text = persona_rec.report.to_json()
    assert ExplanationReport.from_json(text) == persona_rec.report
    assert ExplanationReport.from_json(text).to_json() == text
    again = recommend(sample_kb, sample_kb.entity(ANCHOR), persona_profile, session_id="t")
    assert again.report.to_json() == text


def test_text_rendering(persona_rec):
    text = render_text(persona_rec.report)
    assert text.startswith("Request: ")
    assert "User persona_business" in text
    assert text.count("\n") >= len(persona_rec.report.node_explanations) + 2
