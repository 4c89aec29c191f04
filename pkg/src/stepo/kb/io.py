"""Reading, validating and writing knowledge-base directories."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

from stepo.kb.model import (
    FITS,
    LENGTH_CLASSES,
    PAIRING_FAMILIES,
    ROLES,
    SEMANTIC_KINDS,
    SHAPES,
    TEMPERATURES,
    TREND_KINDS,
    Category,
    ColorSpec,
    GarmentEntity,
    KnowledgeBase,
    PairingRule,
    RuleAttribute,
    ScenarioStyleMatrix,
    SemanticEntity,
    SilhouetteSpec,
    TrendEntry,
    hcl_to_lab,
    temperature_for,
)
from stepo.kb.store import EmbeddingStore
from stepo.principles import StyleConstraintSet, params_from_dict, params_to_dict
from stepo.semantic import Case, CaseLibrary, GraphConfig, build_graph

log = logging.getLogger(__name__)

FILES = {
    "entities": "entities.json",
    "semantics": "semantics.json",
    "rules": "rules.json",
    "principle_params": "principle_params.json",
    "graph": "graph.json",
    "cases": "cases.jsonl",
    "trends": "trends.json",
    "matrix": "scenario_style_matrix.json",
}


@dataclass(frozen=True)
class Finding:
    file: str
    locus: str
    message: str

    def __str__(self) -> str:
        return f"{self.file}:{self.locus}: {self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, file: str, locus: str, message: str) -> None:
        self.findings.append(Finding(file, locus, message))

    def __str__(self) -> str:
        return "\n".join(map(str, self.findings)) if self.findings else "ok: no findings"


class KBLoadError(Exception):
    """The directory cannot be parsed into a knowledge base."""

    def __init__(self, message: str, file: str = "", locus: str = "") -> None:
        self.file, self.locus = file, locus
        where = ":".join(x for x in (file, locus) if x)
        super().__init__(f"{where}: {message}" if where else message)


class KBValidationError(KBLoadError):
    def __init__(self, report: ValidationReport) -> None:
        self.report = report
        first = report.findings[0]
        more = f" (+{len(report.findings) - 1} more)" if len(report.findings) > 1 else ""
        super().__init__(first.message + more, first.file, first.locus)


# -- parsing --------------------------------------------------------------------


def _read_json(root: Path, key: str) -> Any:
    name = FILES[key]
    path = root / name
    if not path.is_file():
        raise KBLoadError(f"missing {key.replace('_', ' ')} file", name)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise KBLoadError(f"malformed JSON ({exc.msg})", name, f"line {exc.lineno}") from None


def _read_jsonl(root: Path, key: str) -> list[Any]:
    name = FILES[key]
    path = root / name
    if not path.is_file():
        raise KBLoadError(f"missing {key} file", name)
    out = []
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise KBLoadError(f"malformed JSON ({exc.msg})", name, f"line {n}") from None
    return out


def _records(file: str, items: Iterable[Any], parse: Callable[[Any], Any]) -> list:
    out = []
    for i, rec in enumerate(items):
        locus = f"[{i}]"
        if isinstance(rec, dict) and "id" in rec:
            locus = f"[{i}] id={rec['id']}"
        try:
            out.append(parse(rec))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise KBLoadError(f"malformed record: {exc}", file, locus) from None
    return out


def parse_color(d: dict, derive_lab: bool = True) -> ColorSpec:
    lab = d.get("lab")
    h, c, l = float(d["hue_deg"]), float(d["chroma"]), float(d["lightness"])
    if lab is None:
        if not derive_lab:
            raise ValueError("color has no lab triple and lab derivation is off")
        lab = hcl_to_lab(h, c, l)
    return ColorSpec(
        hue_deg=h,
        chroma=c,
        lightness=l,
        lab=tuple(float(x) for x in lab),
        temperature=d.get("temperature") or temperature_for(h % 360.0, c),
        name=d.get("name", ""),
    )


def parse_entity(d: dict, derive_lab: bool = True) -> GarmentEntity:
    sil = d["silhouette"]
    return GarmentEntity(
        id=str(d["id"]),
        category=d["category"],
        role=d["role"],
        color=parse_color(d["color"], derive_lab),
        silhouette=SilhouetteSpec(
            shape=sil["shape"],
            fit=sil["fit"],
            length_ratio=float(sil.get("length_ratio", 1.0)),
            length_class=sil.get("length_class", "regular"),
        ),
        tags=frozenset(d.get("tags", ())),
        embedding_ref=d.get("embedding_ref"),
        name=d.get("name", ""),
    )


def entity_to_dict(e: GarmentEntity) -> dict:
    c, s = e.color, e.silhouette
    out = {
        "id": e.id,
        "category": e.category,
        "role": e.role,
        "color": {"hue_deg": c.hue_deg, "chroma": c.chroma, "lightness": c.lightness, "name": c.name},
        "silhouette": {"shape": s.shape, "fit": s.fit, "length_ratio": s.length_ratio, "length_class": s.length_class},
        "tags": sorted(e.tags),
        "embedding_ref": e.embedding_ref,
    }
    if c.lab is not None:
        out["color"]["lab"] = list(c.lab)
    if c.temperature is not None:
        out["color"]["temperature"] = c.temperature
    if e.name:
        out["name"] = e.name
    return out


def _parse_case(d: dict) -> Case:
    return Case(
        id=str(d["id"]),
        embedding_ref=d.get("embedding_ref"),
        text=d.get("text", ""),
        style_vector={k: float(v) for k, v in d.get("style_vector", {}).items()},
        principle_vector={k: float(v) for k, v in d.get("principle_vector", {}).items()},
        item_ids=tuple(d.get("item_ids", ())),
    )


def case_to_dict(c: Case) -> dict:
    return {
        "id": c.id,
        "embedding_ref": c.embedding_ref,
        "text": c.text,
        "style_vector": dict(c.style_vector),
        "principle_vector": dict(c.principle_vector),
        "item_ids": list(c.item_ids),
    }


def read_kb(root: str | Path, derive_lab: bool = True) -> tuple[KnowledgeBase, ValidationReport]:
    """Parse a KB directory without enforcing invariants.

    Raises :class:`KBLoadError` for unreadable input; reference problems that
    parsing has to drop are returned as findings.
    """
    root = Path(root)
    if not root.is_dir():
        raise KBLoadError(f"not a directory: {root}")
    report = ValidationReport()

    raw_entities = _read_json(root, "entities")
    if not isinstance(raw_entities, list):
        raise KBLoadError("expected an array of entity records", FILES["entities"])
    entities = _records(FILES["entities"], raw_entities, lambda d: parse_entity(d, derive_lab))

    sem = _read_json(root, "semantics")
    categories = _records(
        FILES["semantics"],
        sem.get("categories", []),
        lambda d: Category(d["id"], d["role"], float(d.get("formality", 0.5)), frozenset(d.get("tags", ()))),
    )
    semantics = _records(
        FILES["semantics"],
        sem.get("semantics", []),
        lambda d: SemanticEntity(d["id"], d["kind"], frozenset(d.get("attribute_signature", ()))),
    )

    rules_doc = _read_json(root, "rules")
    rules = _records(
        FILES["rules"],
        rules_doc.get("rules", []),
        lambda d: RuleAttribute(d["id"], d["lhs"], d["op"], d["rhs"], d.get("unit", "")),
    )
    by_id = {r.id: r for r in rules}
    style_constraints = []
    for i, d in enumerate(rules_doc.get("styles", [])):
        picked = []
        for rid in d.get("rule_ids", []):
            if rid in by_id:
                picked.append(by_id[rid])
            else:
                report.add(FILES["rules"], f"styles[{i}] style_id={d.get('style_id')}", f"unknown rule id {rid!r}")
        style_constraints.append(StyleConstraintSet(d["style_id"], tuple(picked)))
    pairing = _records(
        FILES["rules"],
        rules_doc.get("pairing", []),
        lambda d: PairingRule(d["id"], d["family"], d["attribute"], str(d["value"])),
    )

    try:
        params = params_from_dict(_read_json(root, "principle_params"))
    except (KeyError, TypeError, ValueError) as exc:
        raise KBLoadError(f"malformed record: {exc}", FILES["principle_params"]) from None

    gdoc = _read_json(root, "graph")
    try:
        graph_config = GraphConfig(
            lam=float(gdoc.get("lambda", 0.5)),
            strengths={(s["style"], s["principle"]): float(s["value"]) for s in gdoc.get("strengths", [])},
            activation_threshold=float(gdoc.get("activation_threshold", 0.5)),
            principles=tuple(gdoc.get("principles", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise KBLoadError(f"malformed record: {exc}", FILES["graph"]) from None

    try:
        cases = CaseLibrary(_records(FILES["cases"], _read_jsonl(root, "cases"), _parse_case))
    except KBLoadError:
        raise
    except ValueError as exc:
        raise KBLoadError(str(exc), FILES["cases"]) from None

    trends = _records(
        FILES["trends"],
        _read_json(root, "trends"),
        lambda d: TrendEntry(d["id"], d["season"], d["kind"], frozenset(d["attribute_signature"]), float(d["weight"])),
    )

    mdoc = _read_json(root, "matrix")
    try:
        matrix = ScenarioStyleMatrix(
            tuple(mdoc["scenarios"]), tuple(mdoc["styles"]), tuple(tuple(float(x) for x in r) for r in mdoc["values"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise KBLoadError(f"malformed record: {exc}", FILES["matrix"]) from None

    embeddings = None
    if (root / "embeddings.meta.json").is_file():
        try:
            embeddings = EmbeddingStore.load(root)
        except (OSError, KeyError, ValueError) as exc:
            raise KBLoadError(str(exc), "embeddings.bin") from None

    try:
        graph = build_graph(
            cases, graph_config.strengths, graph_config.lam, graph_config.activation_threshold, graph_config.principles
        )
    except ValueError as exc:
        raise KBLoadError(str(exc), FILES["graph"]) from None
    for i, e in enumerate(gdoc.get("edges", []) or []):
        key = (e.get("style"), e.get("principle"))
        if abs(graph.edges.get(key, 0.0) - float(e.get("weight", -1))) > 1e-9:
            report.add(FILES["graph"], f"edges[{i}] {key[0]}->{key[1]}", "cached edge weight disagrees with recomputation")

    kb = KnowledgeBase(
        categories=tuple(categories),
        entities=tuple(entities),
        semantics=tuple(semantics),
        rules=tuple(rules),
        style_constraints=tuple(style_constraints),
        pairing_rules=tuple(pairing),
        principle_params=params,
        graph=graph,
        graph_config=graph_config,
        cases=cases,
        trends=tuple(trends),
        matrix=matrix,
        embeddings=embeddings,
    )
    return kb, report


# -- validation -------------------------------------------------------------------


def _dupes(ids: Iterable[str]) -> list[str]:
    seen, out = set(), []
    for i in ids:
        if i in seen and i not in out:
            out.append(i)
        seen.add(i)
    return out


def _check_descriptor(report: ValidationReport, file: str, locus: str, desc: str, kb: KnowledgeBase, styles: set) -> None:
    key, _, value = desc.partition("=")
    if not value:
        return
    if key == "style" and value not in styles:
        report.add(file, locus, f"unknown style {value!r}")
    elif key == "category" and value not in {c.id for c in kb.categories}:
        report.add(file, locus, f"unknown category {value!r}")


def validate_kb(kb: KnowledgeBase) -> ValidationReport:
    """One finding per violated invariant; an empty report means the KB is valid."""
    r = ValidationReport()
    E, S, R = FILES["entities"], FILES["semantics"], FILES["rules"]
    cat_ids = {c.id for c in kb.categories}
    style_ids = {s.id for s in kb.semantics if s.kind == "style"}
    scenario_ids = {s.id for s in kb.semantics if s.kind == "scenario"}
    n_emb = len(kb.embeddings) if kb.embeddings is not None else 0

    for d in _dupes(c.id for c in kb.categories):
        r.add(S, f"category={d}", "duplicate category id")
    for c in kb.categories:
        if c.role not in ROLES:
            r.add(S, f"category={c.id}", f"invalid role {c.role!r}")
        if not 0.0 <= c.formality <= 1.0:
            r.add(S, f"category={c.id}", "formality out of [0,1]")

    for d in _dupes(e.id for e in kb.entities):
        r.add(E, f"id={d}", "duplicate entity id")
    for e in kb.entities:
        loc = f"id={e.id}"
        col, sil = e.color, e.silhouette
        if e.category not in cat_ids:
            r.add(E, loc, f"unknown category {e.category!r}")
        elif kb.category(e.category).role != e.role:
            r.add(E, loc, f"role {e.role!r} disagrees with category {e.category!r}")
        if e.role not in ROLES:
            r.add(E, loc, f"invalid role {e.role!r}")
        if not 0.0 <= col.hue_deg < 360.0:
            r.add(E, loc, f"hue {col.hue_deg} outside [0,360)")
        if not 0.0 <= col.lightness <= 100.0:
            r.add(E, loc, f"lightness {col.lightness} outside [0,100]")
        if col.chroma < 0:
            r.add(E, loc, "negative chroma")
        if col.temperature not in TEMPERATURES:
            r.add(E, loc, f"invalid temperature {col.temperature!r}")
        elif 0.0 <= col.hue_deg < 360.0 and col.temperature != temperature_for(col.hue_deg, col.chroma):
            r.add(E, loc, f"temperature {col.temperature!r} inconsistent with hue/chroma bands")
        if sil.shape not in SHAPES:
            r.add(E, loc, f"invalid silhouette shape {sil.shape!r}")
        if sil.fit not in FITS:
            r.add(E, loc, f"invalid fit {sil.fit!r}")
        if sil.length_class not in LENGTH_CLASSES:
            r.add(E, loc, f"invalid length class {sil.length_class!r}")
        if not 0.0 < sil.length_ratio <= 2.0:
            r.add(E, loc, f"length ratio {sil.length_ratio} outside (0,2]")
        if e.embedding_ref is not None and not 0 <= e.embedding_ref < n_emb:
            r.add(E, loc, f"embedding_ref {e.embedding_ref} outside the embedding store")

    for d in _dupes(f"{s.kind}={s.id}" for s in kb.semantics):
        r.add(S, d, "duplicate semantic id")
    for s in kb.semantics:
        if s.kind not in SEMANTIC_KINDS:
            r.add(S, f"semantic={s.id}", f"invalid kind {s.kind!r}")

    for d in _dupes(x.id for x in kb.rules):
        r.add(R, f"rule={d}", "duplicate rule id")
    for x in kb.rules:
        if (msg := x.type_error()) is not None:
            r.add(R, f"rule={x.id}", msg)
    for sc in kb.style_constraints:
        if sc.style_id not in style_ids:
            r.add(R, f"style={sc.style_id}", "constraint set for unknown style")
        for d in _dupes(c.id for c in sc.constraints):
            r.add(R, f"style={sc.style_id}", f"duplicate constraint {d!r}")
    for p in kb.pairing_rules:
        if p.family not in PAIRING_FAMILIES or p.attribute not in PAIRING_FAMILIES[p.family]:
            r.add(R, f"pairing={p.id}", f"invalid family/attribute {p.family}/{p.attribute}")

    for msg in kb.principle_params.problems():
        r.add(FILES["principle_params"], "-", msg)

    G = FILES["graph"]
    gc = kb.graph_config
    if not 0.0 <= gc.lam <= 1.0:
        r.add(G, "lambda", "lambda out of [0,1]")
    for (s, p), v in gc.strengths.items():
        if s not in style_ids:
            r.add(G, f"strength {s}->{p}", f"unknown style {s!r}")
        if gc.principles and p not in gc.principles:
            r.add(G, f"strength {s}->{p}", f"unknown principle {p!r}")
        if v < 0:
            r.add(G, f"strength {s}->{p}", "negative strength")
    for (s, p), w in kb.graph.edges.items():
        if not 0.0 <= w <= 1.0:
            r.add(G, f"edge {s}->{p}", "edge weight out of [0,1]")

    C = FILES["cases"]
    for c in kb.cases:
        loc = f"case={c.id}"
        for item in c.item_ids:
            if not kb.has_entity(item):
                r.add(C, loc, f"case {c.id!r} references unknown entity {item!r}")
        for s, v in c.style_vector.items():
            if s not in style_ids:
                r.add(C, loc, f"unknown style {s!r}")
            if not 0.0 <= v <= 1.0:
                r.add(C, loc, f"style activation {s}={v} out of [0,1]")
        for p, v in c.principle_vector.items():
            if gc.principles and p not in gc.principles:
                r.add(C, loc, f"unknown principle {p!r}")
            if not 0.0 <= v <= 1.0:
                r.add(C, loc, f"principle activation {p}={v} out of [0,1]")
        if c.embedding_ref is not None and not 0 <= c.embedding_ref < n_emb:
            r.add(C, loc, f"embedding_ref {c.embedding_ref} outside the embedding store")

    T = FILES["trends"]
    for d in _dupes(t.id for t in kb.trends):
        r.add(T, f"trend={d}", "duplicate trend id")
    for t in kb.trends:
        if not 0.0 <= t.weight <= 1.0:
            r.add(T, f"trend={t.id}", "weight out of [0,1]")
        if t.kind not in TREND_KINDS:
            r.add(T, f"trend={t.id}", f"invalid kind {t.kind!r}")
        for desc in sorted(t.attribute_signature):
            _check_descriptor(r, T, f"trend={t.id}", desc, kb, style_ids)

    M = FILES["matrix"]
    m = kb.matrix
    if _dupes(m.scenarios) or _dupes(m.styles):
        r.add(M, "labels", "row/column labels must be unique")
    if len(m.values) != len(m.scenarios) or any(len(row) != len(m.styles) for row in m.values):
        r.add(M, "values", f"expected a {len(m.scenarios)}x{len(m.styles)} grid")
    for i, row in enumerate(m.values):
        for j, v in enumerate(row):
            if not 0.0 <= v <= 1.0:
                sc = m.scenarios[i] if i < len(m.scenarios) else i
                st = m.styles[j] if j < len(m.styles) else j
                r.add(M, f"{sc}/{st}", f"compatibility out of [0,1]: {v}")
    for sc in m.scenarios:
        if sc not in scenario_ids:
            r.add(M, f"scenario={sc}", "row label is not a scenario entity")
    for st in m.styles:
        if st not in style_ids:
            r.add(M, f"style={st}", "column label is not a style entity")
    return r


def load_kb(root: str | Path, derive_lab: bool = True) -> KnowledgeBase:
    """Load and fully validate a KB directory; raises on any problem."""
    kb, report = read_kb(root, derive_lab)
    report.findings.extend(validate_kb(kb).findings)
    if not report.ok:
        raise KBValidationError(report)
    log.debug("loaded KB from %s: %d entities, %d cases", root, len(kb.entities), len(kb.cases))
    return kb


def inspect_kb(root: str | Path) -> tuple[KnowledgeBase, ValidationReport]:
    """Parse and validate without raising on findings (load errors still raise)."""
    kb, report = read_kb(root)
    report.findings.extend(validate_kb(kb).findings)
    return kb, report


# -- writing ----------------------------------------------------------------------


def _dump(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def serialize_kb(kb: KnowledgeBase, out: str | Path) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / FILES["entities"], [entity_to_dict(e) for e in kb.entities])
    _dump(
        out / FILES["semantics"],
        {
            "categories": [
                {"id": c.id, "role": c.role, "formality": c.formality, "tags": sorted(c.tags)} for c in kb.categories
            ],
            "semantics": [
                {"id": s.id, "kind": s.kind, "attribute_signature": sorted(s.attribute_signature)} for s in kb.semantics
            ],
        },
    )
    rules = [
        {"id": x.id, "lhs": x.lhs, "op": x.op, "rhs": list(x.rhs) if isinstance(x.rhs, tuple) else x.rhs, "unit": x.unit}
        for x in kb.rules
    ]
    styles = [{"style_id": s.style_id, "rule_ids": [c.id for c in s.constraints]} for s in kb.style_constraints]
    pairing = [{"id": p.id, "family": p.family, "attribute": p.attribute, "value": p.value} for p in kb.pairing_rules]
    _dump(out / FILES["rules"], {"rules": rules, "styles": styles, "pairing": pairing})
    _dump(out / FILES["principle_params"], params_to_dict(kb.principle_params))
    gc = kb.graph_config
    _dump(
        out / FILES["graph"],
        {
            "lambda": gc.lam,
            "activation_threshold": gc.activation_threshold,
            "principles": list(gc.principles),
            "strengths": [{"style": s, "principle": p, "value": v} for (s, p), v in sorted(gc.strengths.items())],
            "edges": [{"style": s, "principle": p, "weight": w} for (s, p), w in sorted(kb.graph.edges.items())],
        },
    )
    with open(out / FILES["cases"], "w", encoding="utf-8") as fh:
        for c in kb.cases:
            fh.write(json.dumps(case_to_dict(c), sort_keys=True, ensure_ascii=False) + "\n")
    _dump(
        out / FILES["trends"],
        [
            {"id": t.id, "season": t.season, "kind": t.kind, "attribute_signature": sorted(t.attribute_signature), "weight": t.weight}
            for t in kb.trends
        ],
    )
    m = kb.matrix
    _dump(out / FILES["matrix"], {"scenarios": list(m.scenarios), "styles": list(m.styles), "values": [list(r) for r in m.values]})
    if kb.embeddings is not None:
        kb.embeddings.save(out)


def build_kb(src: str | Path, out: str | Path) -> ValidationReport:
    """Compile a source directory into a canonical KB directory.

    The source uses the KB layout, except embeddings may be given as
    ``embeddings.json`` ({"ids": [...], "vectors": [[...], ...]}) instead of the
    binary pair. Lab triples and temperatures are derived where missing and the
    style-rule edges are cached. Nothing is written when validation fails.
    """
    src = Path(src)
    kb, report = read_kb(src)
    if kb.embeddings is None and (src / "embeddings.json").is_file():
        doc = json.loads((src / "embeddings.json").read_text(encoding="utf-8"))
        kb = _with_embeddings(kb, EmbeddingStore(doc["ids"], doc["vectors"]))
    report.findings.extend(validate_kb(kb).findings)
    if report.ok:
        serialize_kb(kb, out)
    return report


def _with_embeddings(kb: KnowledgeBase, store: EmbeddingStore) -> KnowledgeBase:
    from dataclasses import replace

    return replace(kb, embeddings=store)
