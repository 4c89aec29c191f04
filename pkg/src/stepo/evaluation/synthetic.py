"""Synthetic knowledge base and outfit dataset with planted pairing rules.

Every held-out pairing is determined by four planted rules:

* category: each anchor bottom sits in an embedding cluster whose reference
  cases all pair it with one top category;
* silhouette: the top's shape, fit and length jointly maximize the silhouette
  principles against the cluster's bottom silhouette;
* color: each user wears one personal color, except trend followers, who wear
  the season's trend color;
* every outfit of a user comes from that user's home cluster.

The trend color harmonizes poorly with the dark anchors, so the tree search
alone prefers a neutral top for trend followers; only re-ranking recovers the
trend color. Without retrieval the search has no case or preference evidence
for the category.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from stepo.evaluation.dataset import Outfit, write_dataset
from stepo.kb.io import build_kb, parse_entity
from stepo.kb.model import FITS, LENGTH_CLASSES, SHAPES, SilhouetteSpec
from stepo.kb.store import EmbeddingStore
from stepo.principles import PrincipleParams, balance, score_silhouette_pair
from stepo.retrieval import LENGTH_RATIOS

DIM = 16
TOP_CATEGORIES = ("blazer", "cardigan", "knit", "polo", "shirt", "sweatshirt", "tee", "vest")
# (shape, fit, length) of each cluster's bottoms
BOTTOM_SILHOUETTES = (
    ("H", "tight", "regular"),
    ("A", "loose", "long"),
    ("X", "fit", "regular"),
    ("O", "loose", "cropped"),
    ("Y", "tight", "long"),
    ("H", "loose", "cropped"),
    ("A", "fit", "regular"),
    ("X", "tight", "long"),
)
ANCHOR_COLOR = {"name": "black", "hue_deg": 0.0, "chroma": 2.0, "lightness": 15.0}
NEUTRAL_TOP = {"name": "charcoal", "hue_deg": 0.0, "chroma": 3.0, "lightness": 35.0}
TREND_COLOR = {"name": "ice mint", "hue_deg": 170.0, "chroma": 25.0, "lightness": 88.0}
PERSONAL_COLORS = (
    {"name": "rust", "hue_deg": 20.0, "chroma": 30.0, "lightness": 35.0},
    {"name": "ochre", "hue_deg": 70.0, "chroma": 30.0, "lightness": 35.0},
    {"name": "forest", "hue_deg": 140.0, "chroma": 30.0, "lightness": 35.0},
    {"name": "teal", "hue_deg": 200.0, "chroma": 30.0, "lightness": 35.0},
    {"name": "plum", "hue_deg": 320.0, "chroma": 30.0, "lightness": 35.0},
)
TREND_WEIGHT = 0.8


@dataclass(frozen=True)
class SyntheticSpec:
    n_users: int = 50
    outfits_per_user: int = 10
    trend_share: float = 0.4
    n_clusters: int = 8
    cases_per_cluster: int = 3
    bottoms_per_cluster: int = 4
    seed: int = 0
    noise: float = 0.3


def best_top_silhouette(bottom: SilhouetteSpec, params: PrincipleParams | None = None) -> tuple[str, str, str]:
    """The top (shape, fit, length) maximizing the mean of pair score and balance; ties by name."""
    params = params or PrincipleParams()

    def score(t):
        top = SilhouetteSpec(t[0], t[1], LENGTH_RATIOS[t[2]], t[2])
        return 0.5 * (score_silhouette_pair(top, bottom, params).total + balance(top, bottom, params))

    # max keeps the first maximal element, so ties resolve in sorted order
    return max(sorted(itertools.product(SHAPES, FITS, LENGTH_CLASSES)), key=score)


def _sil(shape: str, fit: str, length: str) -> dict:
    return {"shape": shape, "fit": fit, "length_class": length, "length_ratio": LENGTH_RATIOS[length]}


def _color(c: dict) -> dict:
    return {k: c[k] for k in ("name", "hue_deg", "chroma", "lightness")}


def generate(root: str | Path, spec: SyntheticSpec | None = None) -> tuple[Path, Path]:
    """Write ``<root>/kb`` and ``<root>/dataset``; returns both paths."""
    spec = spec or SyntheticSpec()
    if not 1 <= spec.n_clusters <= len(TOP_CATEGORIES):
        raise ValueError(f"n_clusters must lie in [1, {len(TOP_CATEGORIES)}]")
    root = Path(root)
    kb_dir, data_dir = root / "kb", root / "dataset"
    rng = np.random.default_rng(spec.seed)
    pick = random.Random(spec.seed)
    centers = rng.normal(size=(spec.n_clusters, DIM))

    clusters = []
    for k in range(spec.n_clusters):
        b = BOTTOM_SILHOUETTES[k % len(BOTTOM_SILHOUETTES)]
        top = best_top_silhouette(SilhouetteSpec(b[0], b[1], LENGTH_RATIOS[b[2]], b[2]))
        clusters.append({"category": TOP_CATEGORIES[k], "style": f"style_{TOP_CATEGORIES[k]}", "bottom": b, "top": top})

    # knowledge base
    kb_ids, kb_vecs, entities, cases = [], [], [], []
    for k, cl in enumerate(clusters):
        for j in range(spec.cases_per_cluster):
            cid = f"case_{k}_{j}"
            t_id, b_id = f"{cid}_top", f"{cid}_bottom"
            entities.append(
                {"id": t_id, "category": cl["category"], "role": "top", "color": {"hue_deg": 0.0, "chroma": 3.0, "lightness": 40.0},
                 "silhouette": _sil(*cl["top"]), "tags": []}
            )
            entities.append(
                {"id": b_id, "category": "trousers", "role": "bottom", "color": {"hue_deg": 0.0, "chroma": 2.0, "lightness": 15.0},
                 "silhouette": _sil(*cl["bottom"]), "tags": []}
            )
            kb_ids.append(cid)
            kb_vecs.append(centers[k] + spec.noise * rng.normal(size=DIM))
            cases.append(
                {"id": cid, "text": f"{cl['category']} over cluster {k} trousers", "item_ids": [t_id, b_id],
                 "style_vector": {cl["style"]: 0.9}, "principle_vector": {f"p_{k}": 0.9, "p_common": 0.6},
                 "embedding_ref": len(kb_ids) - 1}
            )
    for c in (NEUTRAL_TOP, TREND_COLOR) + PERSONAL_COLORS:
        entities.append(
            {"id": f"swatch_{c['name'].replace(' ', '_')}", "category": TOP_CATEGORIES[0], "role": "top",
             "color": _color(c), "silhouette": _sil("H", "fit", "regular"), "tags": []}
        )
    styles = [cl["style"] for cl in clusters]
    docs = {
        "entities.json": entities,
        "semantics.json": {
            "categories": [{"id": c, "role": "top", "formality": 0.5, "tags": []} for c in TOP_CATEGORIES]
            + [{"id": "trousers", "role": "bottom", "formality": 0.6, "tags": []}],
            "semantics": [{"id": s, "kind": "scenario", "attribute_signature": []} for s in ("casual", "social")]
            + [{"id": cl["style"], "kind": "style", "attribute_signature": [f"category={cl['category']}"]} for cl in clusters],
        },
        "rules.json": {
            "rules": [],
            "styles": [],
            "pairing": [{"id": "color_neutral", "family": "color", "attribute": "color_scheme", "value": "neutral"}]
            + [{"id": f"shape_{s}", "family": "silhouette", "attribute": "silhouette_pairing", "value": s} for s in SHAPES]
            + [{"id": f"fit_{f}", "family": "silhouette", "attribute": "fit", "value": f} for f in FITS]
            + [{"id": f"length_{x}", "family": "silhouette", "attribute": "length", "value": x} for x in LENGTH_CLASSES],
        },
        "principle_params.json": {},
        "graph.json": {
            "lambda": 0.5,
            "activation_threshold": 0.5,
            "principles": [f"p_{k}" for k in range(spec.n_clusters)] + ["p_common"],
            "strengths": [{"style": cl["style"], "principle": f"p_{k}", "value": 1.0} for k, cl in enumerate(clusters)],
        },
        "trends.json": [
            {"id": "trend_color", "season": "2025SS", "kind": "color", "attribute_signature": [f"color_value={TREND_COLOR['name']}"],
             "weight": TREND_WEIGHT}
        ],
        "scenario_style_matrix.json": {"scenarios": ["casual", "social"], "styles": styles, "values": [[0.9] * len(styles), [0.3] * len(styles)]},
        "embeddings.json": {"ids": kb_ids, "vectors": np.asarray(kb_vecs).tolist()},
    }
    src = root / "kb_src"
    src.mkdir(parents=True, exist_ok=True)
    for name, doc in docs.items():
        (src / name).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    (src / "cases.jsonl").write_text("".join(json.dumps(c) + "\n" for c in cases), encoding="utf-8")
    report = build_kb(src, kb_dir)
    if not report.ok:
        raise RuntimeError(f"synthetic KB failed validation: {[str(f) for f in report.findings]}")

    # dataset
    items, ids, vecs = [], [], []
    tops: dict[tuple[int, str], str] = {}
    for k, cl in enumerate(clusters):
        for c in (NEUTRAL_TOP, TREND_COLOR) + PERSONAL_COLORS:
            tid = f"top_{k}_{c['name'].replace(' ', '_')}"
            tops[(k, c["name"])] = tid
            items.append({"id": tid, "category": cl["category"], "role": "top", "color": _color(c), "silhouette": _sil(*cl["top"]), "tags": []})
        for j in range(spec.bottoms_per_cluster):
            bid = f"bottom_{k}_{j}"
            ids.append(bid)
            vecs.append(centers[k] + spec.noise * rng.normal(size=DIM))
            items.append(
                {"id": bid, "category": "trousers", "role": "bottom", "color": _color(ANCHOR_COLOR), "silhouette": _sil(*cl["bottom"]),
                 "tags": [], "embedding_ref": len(ids) - 1}
            )
    outfits = {}
    for u in range(spec.n_users):
        k = pick.randrange(spec.n_clusters)
        trend = pick.random() < spec.trend_share
        color = TREND_COLOR["name"] if trend else pick.choice(PERSONAL_COLORS)["name"]
        user = f"u{u:03d}"
        outfits[user] = [
            Outfit(f"{user}_o{i:02d}", (tops[(k, color)], f"bottom_{k}_{pick.randrange(spec.bottoms_per_cluster)}"))
            for i in range(spec.outfits_per_user)
        ]
    write_dataset(data_dir, [parse_entity(d) for d in items], outfits, EmbeddingStore(ids, vecs))
    return kb_dir, data_dir
