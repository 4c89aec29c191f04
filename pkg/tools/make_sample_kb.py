"""Regenerate the bundled sample knowledge base.

    python3 tools/make_sample_kb.py [out_dir]

Writes a source tree to a temporary directory, compiles it with ``build_kb``
and adds a persona history under ``users/``.
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from stepo.kb import build_kb

DIM = 16
OUT = Path(__file__).resolve().parents[1] / "src" / "stepo" / "data" / "sample_kb"

COLORS = {
    "black": (0.0, 2.0, 15.0),
    "charcoal": (250.0, 4.0, 35.0),
    "light grey": (240.0, 3.0, 78.0),
    "white": (90.0, 2.0, 96.0),
    "navy": (265.0, 30.0, 25.0),
    "camel": (70.0, 35.0, 62.0),
    "beige": (80.0, 18.0, 82.0),
    "muted pink": (10.0, 22.0, 75.0),
    "sky blue": (235.0, 28.0, 75.0),
    "olive": (105.0, 30.0, 45.0),
    "burgundy": (15.0, 40.0, 28.0),
    "mustard": (85.0, 60.0, 68.0),
    "denim blue": (250.0, 32.0, 45.0),
    "red": (30.0, 70.0, 50.0),
}

CATEGORIES = [
    ("blazer", "top", 0.9, ["structured", "tailored"]),
    ("shirt", "top", 0.8, ["structured"]),
    ("blouse", "top", 0.75, ["soft"]),
    ("knit_sweater", "top", 0.55, ["knit"]),
    ("cardigan", "top", 0.55, ["knit"]),
    ("polo", "top", 0.5, []),
    ("tshirt", "top", 0.2, ["casual"]),
    ("hoodie", "top", 0.1, ["casual", "sporty"]),
    ("tank_top", "top", 0.15, ["sporty"]),
    ("trousers", "bottom", 0.85, ["tailored"]),
    ("chinos", "bottom", 0.6, []),
    ("skirt", "bottom", 0.6, []),
    ("jeans", "bottom", 0.3, ["casual"]),
    ("shorts", "bottom", 0.15, ["casual"]),
    ("joggers", "bottom", 0.1, ["sporty"]),
    ("suit", "composite", 0.95, ["structured", "tailored"]),
    ("dress", "composite", 0.6, ["soft"]),
]

SCENARIOS = ["business", "social", "casual", "sports", "special"]

STYLES = {
    "business": ["neutral color", "straight cut"],
    "minimalist": ["neutral color", "clean lines"],
    "classic": ["tailored", "straight cut"],
    "smart_casual": ["relaxed", "clean lines"],
    "preppy": ["collared"],
    "romantic": ["soft", "pastel"],
    "bohemian": ["flowing", "print"],
    "vintage": ["retro"],
    "streetwear": ["oversized", "graphic"],
    "sporty": ["sporty"],
    "athleisure": ["sporty", "stretch"],
    "avant_garde": ["asymmetric"],
}

MATRIX = {
    #            bus  min  cla  sma  pre  rom  boh  vin  str  spo  ath  ava
    "business": [1.0, 0.8, 0.9, 0.6, 0.5, 0.2, 0.1, 0.2, 0.1, 0.0, 0.1, 0.2],
    "social": [0.5, 0.7, 0.7, 0.8, 0.6, 0.8, 0.6, 0.6, 0.4, 0.1, 0.3, 0.6],
    "casual": [0.2, 0.6, 0.4, 0.9, 0.6, 0.5, 0.7, 0.6, 0.9, 0.6, 0.8, 0.4],
    "sports": [0.0, 0.2, 0.0, 0.3, 0.2, 0.0, 0.1, 0.0, 0.5, 1.0, 0.9, 0.1],
    "special": [0.4, 0.5, 0.7, 0.3, 0.3, 0.8, 0.5, 0.6, 0.2, 0.0, 0.0, 0.8],
}

RULES = [
    {"id": "formality_business", "lhs": "formality", "op": ">=", "rhs": 0.7, "unit": "score"},
    {"id": "no_casual_elements", "lhs": "tags", "op": "not_in", "rhs": ["casual", "distressed", "graphic", "ripped", "sporty"]},
    {"id": "formality_classic", "lhs": "formality", "op": ">=", "rhs": 0.6, "unit": "score"},
    {"id": "formality_smart", "lhs": "formality", "op": ">=", "rhs": 0.4, "unit": "score"},
    {"id": "formality_relaxed_cap", "lhs": "formality", "op": "<=", "rhs": 0.6, "unit": "score"},
    {"id": "no_embellishment", "lhs": "tags", "op": "not_in", "rhs": ["embellished", "graphic", "print"]},
    {"id": "no_sportswear", "lhs": "tags", "op": "not_in", "rhs": ["sporty"]},
]

STYLE_RULES = {
    "business": ["formality_business", "no_casual_elements"],
    "classic": ["formality_classic", "no_sportswear"],
    "minimalist": ["no_embellishment"],
    "smart_casual": ["formality_smart", "no_sportswear"],
    "preppy": ["formality_smart"],
    "streetwear": ["formality_relaxed_cap"],
    "sporty": ["formality_relaxed_cap"],
    "athleisure": ["formality_relaxed_cap"],
}

PRINCIPLES = [
    "sil_h_line",
    "sil_fit_contrast",
    "sil_golden_ratio",
    "col_neutral",
    "col_monochrome",
    "col_accent",
    "formality_high",
    "casual_mix",
]

STRENGTHS = {
    "business": {"sil_h_line": 0.9, "col_neutral": 1.0, "formality_high": 1.0, "col_monochrome": 0.7},
    "minimalist": {"col_neutral": 0.9, "col_monochrome": 0.8, "sil_h_line": 0.5},
    "classic": {"formality_high": 0.8, "sil_golden_ratio": 0.7, "col_neutral": 0.6},
    "smart_casual": {"sil_fit_contrast": 0.7, "col_accent": 0.5, "casual_mix": 0.6},
    "preppy": {"col_accent": 0.6, "sil_golden_ratio": 0.5},
    "romantic": {"col_accent": 0.8, "sil_fit_contrast": 0.4},
    "bohemian": {"casual_mix": 0.6, "col_accent": 0.7},
    "vintage": {"col_accent": 0.5, "sil_golden_ratio": 0.4},
    "streetwear": {"casual_mix": 0.9, "sil_fit_contrast": 0.6},
    "sporty": {"casual_mix": 0.8},
    "athleisure": {"casual_mix": 0.7, "sil_fit_contrast": 0.3},
    "avant_garde": {"col_accent": 0.6, "sil_fit_contrast": 0.5},
}

# (id, category, color, shape, fit, length class, extra tags, cluster)
ENTITIES = [
    ("black_slim_straight_pants", "trousers", "black", "H", "tight", "regular", ["neutral color", "straight cut", "tailored"], "business"),
    ("charcoal_wide_trousers", "trousers", "charcoal", "A", "loose", "long", ["neutral color"], "business"),
    ("navy_tailored_trousers", "trousers", "navy", "H", "fit", "regular", ["straight cut", "tailored"], "business"),
    ("beige_chinos", "chinos", "beige", "H", "fit", "regular", ["neutral color", "clean lines"], "smart"),
    ("olive_chinos", "chinos", "olive", "H", "loose", "cropped", ["relaxed"], "smart"),
    ("denim_straight_jeans", "jeans", "denim blue", "H", "fit", "regular", ["straight cut"], "casual"),
    ("ripped_jeans", "jeans", "denim blue", "H", "tight", "regular", ["ripped", "distressed"], "street"),
    ("black_pleated_skirt", "skirt", "black", "A", "fit", "long", ["neutral color", "flowing"], "social"),
    ("camel_a_skirt", "skirt", "camel", "A", "fit", "regular", ["retro"], "social"),
    ("grey_joggers", "joggers", "light grey", "O", "loose", "regular", ["stretch"], "sport"),
    ("black_shorts", "shorts", "black", "A", "loose", "cropped", [], "sport"),
    ("light_grey_blazer", "blazer", "light grey", "H", "loose", "regular", ["neutral color", "straight cut"], "business"),
    ("charcoal_blazer", "blazer", "charcoal", "H", "fit", "regular", ["neutral color", "straight cut"], "business"),
    ("navy_blazer", "blazer", "navy", "X", "fit", "regular", ["collared"], "business"),
    ("camel_blazer", "blazer", "camel", "H", "loose", "long", ["neutral color"], "smart"),
    ("white_shirt", "shirt", "white", "H", "fit", "regular", ["neutral color", "collared", "clean lines"], "business"),
    ("sky_blue_shirt", "shirt", "sky blue", "H", "loose", "regular", ["collared"], "business"),
    ("light_grey_shirt", "shirt", "light grey", "H", "fit", "regular", ["neutral color", "straight cut"], "business"),
    ("muted_pink_blouse", "blouse", "muted pink", "H", "loose", "regular", ["soft", "pastel"], "business"),
    ("white_blouse", "blouse", "white", "X", "fit", "regular", ["neutral color", "soft"], "social"),
    ("burgundy_blouse", "blouse", "burgundy", "X", "fit", "cropped", ["flowing"], "social"),
    ("beige_knit", "knit_sweater", "beige", "O", "loose", "regular", ["neutral color", "relaxed"], "smart"),
    ("navy_knit", "knit_sweater", "navy", "H", "fit", "regular", ["clean lines"], "smart"),
    ("mustard_cardigan", "cardigan", "mustard", "O", "loose", "long", ["retro"], "casual"),
    ("camel_cardigan", "cardigan", "camel", "H", "loose", "regular", ["relaxed"], "smart"),
    ("white_polo", "polo", "white", "H", "fit", "regular", ["collared"], "smart"),
    ("olive_polo", "polo", "olive", "H", "fit", "regular", ["collared"], "casual"),
    ("white_tshirt", "tshirt", "white", "H", "fit", "regular", ["clean lines"], "casual"),
    ("graphic_tshirt", "tshirt", "black", "O", "loose", "regular", ["graphic", "oversized"], "street"),
    ("red_tshirt", "tshirt", "red", "H", "fit", "cropped", [], "casual"),
    ("grey_hoodie", "hoodie", "light grey", "O", "loose", "regular", ["oversized"], "street"),
    ("black_hoodie", "hoodie", "black", "O", "loose", "long", ["oversized"], "sport"),
    ("red_tank", "tank_top", "red", "Y", "tight", "cropped", ["stretch"], "sport"),
    ("black_tank", "tank_top", "black", "Y", "tight", "regular", ["stretch"], "sport"),
    ("charcoal_suit", "suit", "charcoal", "H", "fit", "regular", ["neutral color", "straight cut"], "business"),
    ("navy_suit", "suit", "navy", "X", "fit", "regular", ["straight cut"], "business"),
    ("burgundy_dress", "dress", "burgundy", "X", "fit", "long", ["flowing"], "social"),
    ("muted_pink_dress", "dress", "muted pink", "A", "loose", "regular", ["soft", "pastel"], "social"),
    ("sky_blue_shirt_cropped", "shirt", "sky blue", "Y", "tight", "cropped", ["collared"], "smart"),
    ("mustard_knit", "knit_sweater", "mustard", "O", "loose", "cropped", ["relaxed"], "casual"),
]

LENGTH_RATIO = {"cropped": 0.85, "regular": 1.0, "long": 1.2}

# (case id, top, bottom, style activations, principle activations, cluster, text)
CASES = [
    ("case_business_01", "light_grey_blazer", "black_slim_straight_pants", {"business": 0.95, "minimalist": 0.6, "classic": 0.7},
     {"sil_h_line": 0.9, "col_neutral": 0.95, "formality_high": 0.9, "col_monochrome": 0.8}, "business", "light grey H blazer over black slim trousers"),
    ("case_business_02", "white_shirt", "black_slim_straight_pants", {"business": 0.9, "minimalist": 0.7},
     {"sil_h_line": 0.8, "col_neutral": 0.9, "formality_high": 0.8, "col_monochrome": 0.9}, "business", "white shirt with black slim trousers"),
    ("case_business_03", "muted_pink_blouse", "black_slim_straight_pants", {"business": 0.8, "romantic": 0.4, "smart_casual": 0.5},
     {"sil_h_line": 0.7, "col_neutral": 0.6, "col_accent": 0.6, "formality_high": 0.7, "sil_fit_contrast": 0.7}, "business", "loose muted pink blouse with black straight pants"),
    ("case_business_04", "charcoal_blazer", "navy_tailored_trousers", {"business": 0.9, "classic": 0.8},
     {"sil_h_line": 0.9, "col_neutral": 0.8, "formality_high": 0.95}, "business", "charcoal blazer with navy trousers"),
    ("case_business_05", "sky_blue_shirt", "charcoal_wide_trousers", {"business": 0.75, "classic": 0.6},
     {"sil_fit_contrast": 0.6, "col_neutral": 0.7, "formality_high": 0.8, "sil_golden_ratio": 0.6}, "business", "sky blue shirt with wide charcoal trousers"),
    ("case_smart_01", "navy_knit", "beige_chinos", {"smart_casual": 0.9, "preppy": 0.6},
     {"sil_h_line": 0.6, "col_accent": 0.5, "casual_mix": 0.6}, "smart", "navy knit with beige chinos"),
    ("case_smart_02", "camel_cardigan", "olive_chinos", {"smart_casual": 0.85, "vintage": 0.5},
     {"sil_fit_contrast": 0.7, "col_accent": 0.6, "casual_mix": 0.7}, "smart", "camel cardigan with cropped olive chinos"),
    ("case_smart_03", "white_polo", "beige_chinos", {"preppy": 0.9, "smart_casual": 0.7},
     {"sil_golden_ratio": 0.7, "col_neutral": 0.6, "col_accent": 0.3}, "smart", "white polo with beige chinos"),
    ("case_casual_01", "white_tshirt", "denim_straight_jeans", {"smart_casual": 0.6, "minimalist": 0.6},
     {"casual_mix": 0.8, "col_neutral": 0.5, "sil_h_line": 0.6}, "casual", "white tee and straight jeans"),
    ("case_casual_02", "mustard_cardigan", "denim_straight_jeans", {"vintage": 0.8, "bohemian": 0.5},
     {"casual_mix": 0.7, "col_accent": 0.8}, "casual", "mustard cardigan with jeans"),
    ("case_street_01", "graphic_tshirt", "ripped_jeans", {"streetwear": 0.95},
     {"casual_mix": 0.95, "sil_fit_contrast": 0.7}, "street", "oversized graphic tee with ripped jeans"),
    ("case_street_02", "grey_hoodie", "ripped_jeans", {"streetwear": 0.9, "athleisure": 0.5},
     {"casual_mix": 0.9, "sil_fit_contrast": 0.6}, "street", "grey hoodie with ripped jeans"),
    ("case_sport_01", "black_tank", "grey_joggers", {"sporty": 0.9, "athleisure": 0.8},
     {"casual_mix": 0.8, "sil_fit_contrast": 0.8}, "sport", "fitted tank with loose joggers"),
    ("case_sport_02", "red_tank", "black_shorts", {"sporty": 0.95},
     {"casual_mix": 0.7, "col_accent": 0.6}, "sport", "red tank with black shorts"),
    ("case_social_01", "white_blouse", "black_pleated_skirt", {"romantic": 0.7, "classic": 0.6, "minimalist": 0.5},
     {"col_neutral": 0.8, "col_monochrome": 0.7, "sil_golden_ratio": 0.8}, "social", "white blouse with black pleated skirt"),
    ("case_social_02", "burgundy_blouse", "camel_a_skirt", {"vintage": 0.8, "romantic": 0.6},
     {"col_accent": 0.8, "sil_golden_ratio": 0.9}, "social", "cropped burgundy blouse with camel A skirt"),
]

TRENDS = [
    {"id": "ss25_soft_pink", "season": "2025SS", "kind": "color", "attribute_signature": ["color_value=muted pink"], "weight": 0.7},
    {"id": "ss25_light_grey", "season": "2025SS", "kind": "color", "attribute_signature": ["color_value=light grey"], "weight": 0.6},
    {"id": "ss25_relaxed_fit", "season": "2025SS", "kind": "silhouette", "attribute_signature": ["fit=loose"], "weight": 0.6},
    {"id": "ss25_smart_casual", "season": "2025SS", "kind": "scenario-style", "attribute_signature": ["style=smart_casual"], "weight": 0.5},
    {"id": "ss25_blazer", "season": "2025SS", "kind": "product", "attribute_signature": ["category=blazer"], "weight": 0.4},
]

PERSONA = [
    ("p01", ["light_grey_blazer", "black_slim_straight_pants"]),
    ("p02", ["white_shirt", "navy_tailored_trousers"]),
    ("p03", ["charcoal_blazer", "charcoal_wide_trousers"]),
    ("p04", ["light_grey_shirt", "black_slim_straight_pants"]),
    ("p05", ["muted_pink_blouse", "navy_tailored_trousers"]),
    ("p06", ["sky_blue_shirt", "black_slim_straight_pants"]),
    ("p07", ["white_blouse", "black_pleated_skirt"]),
    ("p08", ["navy_knit", "beige_chinos"]),
    ("p09", ["light_grey_blazer", "navy_tailored_trousers"]),
    ("p10", ["white_shirt", "charcoal_wide_trousers"]),
    ("p11", ["camel_blazer", "black_slim_straight_pants"]),
    ("p12", ["light_grey_shirt", "charcoal_wide_trousers"]),
]


def cluster_vectors(rng: np.random.Generator) -> dict[str, np.ndarray]:
    names = sorted({e[-1] for e in ENTITIES} | {c[5] for c in CASES})
    return {n: rng.normal(size=DIM) for n in names}


def build_source(root: Path) -> None:
    rng = np.random.default_rng(7)
    centers = cluster_vectors(rng)
    ids, vectors = [], []

    def embed(key: str, cluster: str, noise: float = 0.25) -> int:
        ids.append(key)
        vectors.append(centers[cluster] + noise * rng.normal(size=DIM))
        return len(ids) - 1

    entities = []
    for eid, cat, color, shape, fit, length, tags, cluster in ENTITIES:
        h, c, l = COLORS[color]
        entities.append(
            {
                "id": eid,
                "name": eid.replace("_", " "),
                "category": cat,
                "role": next(r for cid, r, _, _ in CATEGORIES if cid == cat),
                "color": {"hue_deg": h, "chroma": c, "lightness": l, "name": color},
                "silhouette": {"shape": shape, "fit": fit, "length_class": length, "length_ratio": LENGTH_RATIO[length]},
                "tags": tags,
                "embedding_ref": embed(eid, cluster),
            }
        )
    cases = []
    for cid, top, bottom, styles, principles, cluster, text in CASES:
        cases.append(
            {
                "id": cid,
                "text": text,
                "item_ids": [top, bottom],
                "style_vector": styles,
                "principle_vector": principles,
                "embedding_ref": embed(cid, cluster, 0.15),
            }
        )
    semantics = [{"id": s, "kind": "scenario", "attribute_signature": []} for s in SCENARIOS]
    semantics += [{"id": s, "kind": "style", "attribute_signature": sig} for s, sig in STYLES.items()]
    pairing = [{"id": f"color_{s}", "family": "color", "attribute": "color_scheme", "value": s}
               for s in ("monochromatic", "analogous", "complementary", "triadic", "neutral")]
    pairing += [{"id": f"shape_{s}", "family": "silhouette", "attribute": "silhouette_pairing", "value": s} for s in "HXAOY"]
    pairing += [{"id": f"fit_{f}", "family": "silhouette", "attribute": "fit", "value": f} for f in ("tight", "fit", "loose")]
    pairing += [{"id": f"length_{x}", "family": "silhouette", "attribute": "length", "value": x} for x in ("cropped", "regular", "long")]

    docs = {
        "entities.json": entities,
        "semantics.json": {
            "categories": [{"id": c, "role": r, "formality": f, "tags": t} for c, r, f, t in CATEGORIES],
            "semantics": semantics,
        },
        "rules.json": {
            "rules": RULES,
            "styles": [{"style_id": s, "rule_ids": r} for s, r in STYLE_RULES.items()],
            "pairing": pairing,
        },
        "principle_params.json": {},
        "graph.json": {
            "lambda": 0.5,
            "activation_threshold": 0.5,
            "principles": PRINCIPLES,
            "strengths": [{"style": s, "principle": p, "value": v} for s, row in STRENGTHS.items() for p, v in row.items()],
        },
        "trends.json": TRENDS,
        "scenario_style_matrix.json": {"scenarios": SCENARIOS, "styles": list(STYLES), "values": [MATRIX[s] for s in SCENARIOS]},
        "embeddings.json": {"ids": ids, "vectors": np.round(np.array(vectors), 6).tolist()},
    }
    for name, doc in docs.items():
        (root / name).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    (root / "cases.jsonl").write_text("".join(json.dumps(c) + "\n" for c in cases), encoding="utf-8")


def main(out: Path = OUT) -> None:
    with tempfile.TemporaryDirectory() as tmp:
        build_source(Path(tmp))
        if out.exists():
            shutil.rmtree(out)
        report = build_kb(tmp, out)
    if not report.ok:
        for f in report.findings:
            print(f)
        raise SystemExit(1)
    user = out / "users" / "persona_business"
    user.mkdir(parents=True)
    outfits = [{"outfit_id": oid, "item_ids": items} for oid, items in PERSONA]
    (user / "outfits.json").write_text(json.dumps(outfits, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else OUT)
