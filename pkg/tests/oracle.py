"""Brute-force reference for the tree search, plus the seed KBs it is checked on.

The enumerator derives every action set straight from the KB tables and walks
all complete assignments recursively. It shares only the per-node policy with
the search, since the claim under test is that the beam finds the argmax of
that scoring, not how the scoring is defined.
"""

from __future__ import annotations

import copy

import numpy as np

from stepo.pipeline import PipelineConfig, retrieve_knowledge
from stepo.principles import classify_harmony
from stepo.reasoning.policy import deterministic_policy
from stepo.reasoning.tree import ActionSpace, DecisionNode, SearchConfig, StylingRequest, build_context
from stepo.retrieval import user_preference_stats

from kbfactory import base_docs, garment, make_kb

OTHER_ROLE = {"top": "bottom", "bottom": "top"}
TIE = 1e-12


def oracle_actions(dtype, state, anchor, kb, threshold):
    if dtype == "scenario":
        return list(kb.matrix.scenarios)
    if dtype == "style":
        if "scenario" not in state:
            return list(kb.matrix.styles)
        row = kb.matrix.values[kb.matrix.scenarios.index(state["scenario"])]
        return [s for s, v in zip(kb.matrix.styles, row) if v >= threshold]
    if dtype == "color_scheme":
        seen = []
        for c in kb.palette():
            s = classify_harmony(anchor.color, c, kb.principle_params).scheme
            if s not in seen:
                seen.append(s)
        return seen
    if dtype == "color_value":
        want = state.get("color_scheme")
        return [c.name for c in kb.palette() if want is None or classify_harmony(anchor.color, c, kb.principle_params).scheme == want]
    if dtype == "category":
        return [c.id for c in kb.categories if c.role == OTHER_ROLE[anchor.role]]
    return {"silhouette_pairing": ["H", "X", "A", "O", "Y"], "fit": ["tight", "fit", "loose"], "length": ["cropped", "regular", "long"]}[dtype]


def enumerate_assignments(request, kb):
    """Every complete assignment with its geometric-mean score."""
    seq = request.config.type_sequence
    out = []

    def walk(state, steps):
        depth = len(state)
        if depth == len(seq):
            out.append((dict(state), float(np.exp(np.mean(np.log(steps))))))
            return
        dtype = seq[depth]
        actions = oracle_actions(dtype, state, request.anchor, kb, request.config.scene_threshold)
        if not actions:
            return
        node = DecisionNode(id="oracle", dtype=dtype, state=dict(state))
        scores = deterministic_policy(build_context(node, request), ActionSpace(dtype, tuple(actions)), kb)
        for a in actions:
            walk({**state, dtype: a}, steps + [scores[a]])

    walk({}, [])
    return out


def descriptors(attrs):
    return tuple(sorted(f"{k}={v}" for k, v in attrs.items()))


def oracle_top(request, kb):
    scored = enumerate_assignments(request, kb)
    best = max(s for _, s in scored)
    # float ties are broken by the sorted descriptor tuple, as the search does
    tied = [a for a, s in scored if s >= best - TIE]
    return min(tied, key=descriptors), len(scored)


# -- seed KBs -------------------------------------------------------------------------


def seed_neutral_bottom(root):
    """Black trousers anchor, two scenarios, mixed palette."""
    kb = make_kb(root)
    return kb, "anchor_pants", [["grey_shirt", "anchor_pants"], ["navy_tee", "anchor_pants"]], ("scenario", "style", "category", "color_value", "fit")


def seed_chromatic_top(root):
    """Red shirt anchor whose palette spans all five harmony schemes."""
    docs = base_docs()
    docs["entities.json"] = [
        garment("red_shirt", "shirt", "top", 20, 50, 45, "Y", "fit", name="red", ref=1),
        garment("navy_trousers", "trousers", "bottom", 250, 40, 25, "H", "fit", name="navy"),
        garment("rust_jeans", "jeans", "bottom", 30, 40, 40, "A", "loose", tags=["casual"], name="rust"),
        garment("olive_skirt", "skirt", "bottom", 100, 30, 50, "A", "fit", name="olive"),
        garment("teal_trousers", "trousers", "bottom", 200, 35, 45, "H", "tight", name="teal"),
        garment("grey_trousers", "trousers", "bottom", 0, 3, 60, "H", "fit", name="grey"),
    ]
    docs["semantics.json"]["categories"] = [
        {"id": "shirt", "role": "top", "formality": 0.8, "tags": []},
        {"id": "trousers", "role": "bottom", "formality": 0.8, "tags": []},
        {"id": "jeans", "role": "bottom", "formality": 0.4, "tags": ["casual"]},
        {"id": "skirt", "role": "bottom", "formality": 0.7, "tags": []},
    ]
    docs["cases.jsonl"][0]["item_ids"] = ["red_shirt", "grey_trousers"]
    docs["trends.json"] = [{"id": "t_olive", "season": "2025SS", "kind": "color", "attribute_signature": ["color_value=olive"], "weight": 0.7}]
    kb = make_kb(root, docs)
    return kb, "red_shirt", [["red_shirt", "rust_jeans"], ["red_shirt", "olive_skirt"]], ("style", "color_scheme", "silhouette_pairing", "category", "color_value")


def seed_full_sequence(root):
    """Default eight-level sequence over a two-color palette."""
    docs = base_docs()
    docs["entities.json"] = copy.deepcopy(docs["entities.json"][:2])
    kb = make_kb(root, docs)
    return kb, "anchor_pants", [["grey_shirt", "anchor_pants"]], None


SEEDS = {"neutral_bottom": seed_neutral_bottom, "chromatic_top": seed_chromatic_top, "full_sequence": seed_full_sequence}


def seed_request(name, root, beam_width=None):
    kb, anchor_id, history, sequence = SEEDS[name](root)
    profile = user_preference_stats(history, kb, "seed")
    anchor = kb.entity(anchor_id)
    knowledge, _, _ = retrieve_knowledge(anchor, kb, profile, PipelineConfig())
    base = SearchConfig() if sequence is None else SearchConfig(type_sequence=sequence)
    request = StylingRequest(profile, anchor, knowledge, base)
    n = len(enumerate_assignments(request, kb))
    cfg = SearchConfig(beam_width=beam_width or n, branching_cap=64, type_sequence=base.type_sequence)
    return StylingRequest(profile, anchor, knowledge, cfg), kb, n
