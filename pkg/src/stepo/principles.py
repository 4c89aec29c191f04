"""Quantitative styling principles: silhouette, color, style gates, and the metric space."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from stepo.kb.model import FITS, SHAPES, ColorSpec, RuleAttribute, SilhouetteSpec, hue_difference

GOLDEN_SPLIT = 0.618
HARMONY_SCHEMES = ("monochromatic", "analogous", "complementary", "triadic", "neutral")


class UnknownAttributeError(KeyError):
    """A constraint refers to an attribute the outfit does not carry."""


@dataclass(frozen=True)
class ColorMap:
    c1_slope: float = 50.0
    c2_center: float = 20.0
    c2_slope: float = 50.0
    c4_mismatch: float = 0.3


def _default_sil_tables() -> dict:
    return {
        "fit": {"tight": 0.7, "fit": 0.9, "loose": 0.85},
        "shape": {"H": 0.9, "X": 0.85, "A": 0.8, "O": 0.7, "Y": 0.8},
        "length": {"cropped": 0.8, "regular": 0.9, "long": 0.75},
    }


# rows: top shape, columns: bottom shape, both in SHAPES order
DEFAULT_SHAPE_COMPAT = (
    (0.9, 0.6, 0.7, 0.5, 0.4),
    (0.6, 0.8, 0.9, 0.4, 0.3),
    (0.8, 0.5, 0.5, 0.4, 0.6),
    (0.8, 0.4, 0.4, 0.3, 0.7),
    (0.6, 0.5, 0.9, 0.4, 0.3),
)
# rows: top fit, columns: bottom fit, both in FITS order
DEFAULT_FIT_CONTRAST = (
    (0.4, 0.7, 0.9),
    (0.7, 0.6, 0.8),
    (0.9, 0.8, 0.4),
)


@dataclass(frozen=True)
class PrincipleParams:
    rho: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    beta: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    color_map: ColorMap = field(default_factory=ColorMap)
    sil_tables: Mapping[str, Mapping[str, float]] = field(default_factory=_default_sil_tables)
    golden_sigma: float = 0.15
    shape_compat: tuple[tuple[float, ...], ...] = DEFAULT_SHAPE_COMPAT
    fit_contrast: tuple[tuple[float, ...], ...] = DEFAULT_FIT_CONTRAST

    def __hash__(self) -> int:
        return hash((self.rho, self.beta, self.color_map, self.golden_sigma, self.shape_compat, self.fit_contrast))

    def problems(self) -> list[str]:
        out = []
        if len(self.rho) != 3 or abs(sum(self.rho) - 1.0) > 1e-9:
            out.append("rho must be 3 weights summing to 1")
        if len(self.beta) != 4 or abs(sum(self.beta) - 1.0) > 1e-9:
            out.append("beta must be 4 weights summing to 1")
        if not self.golden_sigma > 0:
            out.append("golden_sigma must be positive")
        for name, grid, n in (("shape_compat", self.shape_compat, 5), ("fit_contrast", self.fit_contrast, 3)):
            if len(grid) != n or any(len(r) != n for r in grid):
                out.append(f"{name} must be {n}x{n}")
            elif any(not 0.0 <= v <= 1.0 for r in grid for v in r):
                out.append(f"{name} values must lie in [0,1]")
        for key, keys in (("fit", FITS), ("shape", SHAPES), ("length", ("cropped", "regular", "long"))):
            table = self.sil_tables.get(key, {})
            missing = [k for k in keys if k not in table]
            if missing:
                out.append(f"sil_tables.{key} missing {missing}")
            elif any(not 0.0 <= float(v) <= 1.0 for v in table.values()):
                out.append(f"sil_tables.{key} values must lie in [0,1]")
        return out

    def shape_pair(self, top: str, bottom: str) -> float:
        return self.shape_compat[SHAPES.index(top)][SHAPES.index(bottom)]

    def fit_pair(self, top: str, bottom: str) -> float:
        return self.fit_contrast[FITS.index(top)][FITS.index(bottom)]


@dataclass(frozen=True)
class SilhouetteScore:
    f: tuple[float, float, float]
    total: float


@dataclass(frozen=True)
class ColorScore:
    c: tuple[float, float, float, float]
    raw: Mapping[str, Any]
    total: float


@dataclass(frozen=True)
class StyleConstraintSet:
    style_id: str
    constraints: tuple[RuleAttribute, ...] = ()

    @property
    def formality_min(self) -> float | None:
        for c in self.constraints:
            if c.lhs == "formality" and c.op == ">=":
                return float(c.rhs)
        return None

    @property
    def prohibited_tags(self) -> frozenset[str]:
        return frozenset(t for c in self.constraints if c.lhs == "tags" and c.op == "not_in" for t in c.rhs)


# -- silhouette ---------------------------------------------------------------


def combine_silhouette(f: Sequence[float], rho: Sequence[float]) -> float:
    return float(sum(r * x for r, x in zip(rho, f)))


def score_silhouette_pair(top: SilhouetteSpec, bottom: SilhouetteSpec, params: PrincipleParams) -> SilhouetteScore:
    t = params.sil_tables
    f1 = 0.5 * (t["fit"][top.fit] + t["fit"][bottom.fit])
    per_garment_shape = 0.5 * (t["shape"][top.shape] + t["shape"][bottom.shape])
    f2 = 0.5 * (per_garment_shape + params.shape_pair(top.shape, bottom.shape))
    f3 = 0.5 * (t["length"][top.length_class] + t["length"][bottom.length_class])
    f = (float(f1), float(f2), float(f3))
    return SilhouetteScore(f=f, total=combine_silhouette(f, params.rho))


def golden_ratio_score(split: float, sigma: float = 0.15) -> float:
    """Gaussian bump over the top/total visual-length split, peaking at 0.618."""
    if not 0.0 < split < 1.0:
        raise ValueError(f"split {split!r} outside (0, 1)")
    return math.exp(-((split - GOLDEN_SPLIT) ** 2) / (2.0 * sigma**2))


def length_split(top: SilhouetteSpec, bottom: SilhouetteSpec) -> float:
    return top.length_ratio / (top.length_ratio + bottom.length_ratio)


def balance(top: SilhouetteSpec, bottom: SilhouetteSpec, params: PrincipleParams) -> float:
    """Upper/lower harmony: mean of fit contrast, shape stability and golden-ratio proportion."""
    golden = golden_ratio_score(length_split(top, bottom), params.golden_sigma)
    return (params.fit_pair(top.fit, bottom.fit) + params.shape_pair(top.shape, bottom.shape) + golden) / 3.0


# -- color --------------------------------------------------------------------


def saturation_ratio(a: ColorSpec, b: ColorSpec) -> float:
    if a.chroma == 0 and b.chroma == 0:
        return 1.0
    if b.chroma == 0:
        return math.inf
    return a.chroma / b.chroma


def color_components(
    delta_h: float, delta_l: float, s_ratio: float, same_temp: bool, params: PrincipleParams
) -> tuple[float, float, float, float]:
    cm = params.color_map
    c1 = max(0.0, 1.0 - delta_h / cm.c1_slope)
    c2 = max(0.0, 1.0 - abs(delta_l - cm.c2_center) / cm.c2_slope)
    if s_ratio <= 0 or math.isinf(s_ratio):
        c3 = 0.0
    else:
        c3 = max(0.0, 2.0 - max(s_ratio, 1.0 / s_ratio))
    c4 = 1.0 if same_temp else cm.c4_mismatch
    return (c1, c2, c3, c4)


def score_color_values(
    delta_h: float, delta_l: float, s_ratio: float, same_temp: bool, params: PrincipleParams
) -> ColorScore:
    """Color score from already-measured differences."""
    c = color_components(delta_h, delta_l, s_ratio, same_temp, params)
    raw = {"delta_h": float(delta_h), "delta_l": float(delta_l), "s_ratio": float(s_ratio), "same_temp": bool(same_temp)}
    return ColorScore(c=c, raw=raw, total=float(sum(w * x for w, x in zip(params.beta, c))))


def score_color_pair(a: ColorSpec, b: ColorSpec, params: PrincipleParams) -> ColorScore:
    dh = hue_difference(a.hue_deg, b.hue_deg)
    dl = abs(a.lightness - b.lightness)
    same = a.temperature_or_derived() == b.temperature_or_derived()
    return score_color_values(dh, dl, saturation_ratio(a, b), same, params)


def delta_e(a: Sequence[float], b: Sequence[float]) -> float:
    """CIE76 color difference: Euclidean distance in Lab."""
    return math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a, b)))


def harmony_scheme(delta_h: float, neutral: bool) -> str:
    if neutral:
        return "neutral"
    if delta_h <= 15:
        return "monochromatic"
    if delta_h <= 45:
        return "analogous"
    if delta_h >= 150:
        return "complementary"
    if abs(delta_h - 120) <= 12:
        return "triadic"
    # gaps (45,108) and (132,150): nearest bucket edge, lower bucket on ties
    if delta_h < 108:
        return "analogous" if delta_h - 45 <= 108 - delta_h else "triadic"
    return "triadic" if delta_h - 132 <= 150 - delta_h else "complementary"


def scheme_hue_bounds(scheme: str) -> list[RuleAttribute]:
    """Hue-difference constraints a color must meet to belong to ``scheme``."""
    table = {
        "monochromatic": [("<=", 15)],
        "analogous": [(">=", 15), ("<=", 45)],
        "triadic": [(">=", 108), ("<=", 132)],
        "complementary": [(">=", 150)],
        "neutral": [],
    }
    if scheme not in table:
        raise ValueError(f"unknown harmony scheme {scheme!r}")
    out = [RuleAttribute(f"scheme:{scheme}:{i}", "hue_difference", op, v, "deg") for i, (op, v) in enumerate(table[scheme])]
    if scheme == "neutral":
        out.append(RuleAttribute("scheme:neutral:0", "chroma_min", "<=", 10, ""))
    return out


@dataclass(frozen=True)
class Harmony:
    scheme: str
    score: float
    high_contrast: bool
    delta_e: float


def classify_harmony(a: ColorSpec, b: ColorSpec, params: PrincipleParams | None = None) -> Harmony:
    """Scheme, scheme-relative score and contrast flag for a color pair.

    The score is the color-pair score with the hue term measured as the
    deviation from the scheme's ideal angle (0, 120 or 180 degrees).
    """
    params = params or PrincipleParams()
    dh = hue_difference(a.hue_deg, b.hue_deg)
    scheme = harmony_scheme(dh, a.is_neutral or b.is_neutral)
    base = score_color_pair(a, b, params)
    if scheme == "neutral":
        hue_term = 0.0
    elif scheme == "triadic":
        hue_term = abs(dh - 120.0)
    elif scheme == "complementary":
        hue_term = 180.0 - dh
    else:
        hue_term = dh
    scored = score_color_values(hue_term, base.raw["delta_l"], base.raw["s_ratio"], base.raw["same_temp"], params)
    de = delta_e(a.lab_or_derived(), b.lab_or_derived())
    return Harmony(scheme=scheme, score=scored.total, high_contrast=scheme == "complementary" and de > 30.0, delta_e=de)


# -- style gates and metric space ------------------------------------------------


def _lookup(attributes: Mapping[str, Any], constraint: RuleAttribute) -> Any:
    if constraint.lhs not in attributes:
        raise UnknownAttributeError(f"constraint {constraint.id} refers to unknown attribute {constraint.lhs!r}")
    return attributes[constraint.lhs]


def constraint_holds(attributes: Mapping[str, Any], constraint: RuleAttribute) -> bool:
    return constraint.holds(_lookup(attributes, constraint))


def check_style(attributes: Mapping[str, Any], constraints: StyleConstraintSet) -> int:
    """1 iff every constraint of the style holds for the outfit, else 0."""
    return int(all(constraint_holds(attributes, c) for c in constraints.constraints))


def check_style_partial(attributes: Mapping[str, Any], constraints: StyleConstraintSet) -> int:
    """Like :func:`check_style` but skips constraints on attributes not yet decided."""
    return int(all(c.holds(attributes[c.lhs]) for c in constraints.constraints if c.lhs in attributes))


def style_compatibility(style: StyleConstraintSet, attributes: Mapping[str, Any], weights: Sequence[float]) -> float:
    if len(weights) != len(style.constraints):
        raise ValueError(f"{len(weights)} weights for {len(style.constraints)} constraints")
    if weights and abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    return float(sum(w for w, c in zip(weights, style.constraints) if constraint_holds(attributes, c)))


def rule_satisfaction(attributes: Mapping[str, Any], ruleset: Sequence[StyleConstraintSet]) -> int:
    return int(all(check_style(attributes, s) for s in ruleset))


def params_to_dict(p: PrincipleParams) -> dict:
    return {
        "rho": list(p.rho),
        "beta": list(p.beta),
        "color_map": {
            "c1_slope": p.color_map.c1_slope,
            "c2_center": p.color_map.c2_center,
            "c2_slope": p.color_map.c2_slope,
            "c4_mismatch": p.color_map.c4_mismatch,
        },
        "sil_tables": {k: dict(v) for k, v in p.sil_tables.items()},
        "shape_compat": [list(r) for r in p.shape_compat],
        "fit_contrast": [list(r) for r in p.fit_contrast],
        "golden_sigma": p.golden_sigma,
    }


def params_from_dict(d: Mapping[str, Any]) -> PrincipleParams:
    default = PrincipleParams()
    return PrincipleParams(
        rho=tuple(float(x) for x in d.get("rho", default.rho)),
        beta=tuple(float(x) for x in d.get("beta", default.beta)),
        color_map=ColorMap(**{k: float(v) for k, v in d.get("color_map", {}).items()}),
        sil_tables={k: {kk: float(vv) for kk, vv in v.items()} for k, v in d.get("sil_tables", default.sil_tables).items()},
        golden_sigma=float(d.get("golden_sigma", default.golden_sigma)),
        shape_compat=tuple(tuple(float(x) for x in r) for r in d.get("shape_compat", default.shape_compat)),
        fit_contrast=tuple(tuple(float(x) for x in r) for r in d.get("fit_contrast", default.fit_contrast)),
    )
