"""Command-line entry points: ``pafa`` (knowledge base) and ``stepo`` (recommendation, evaluation, traces).

Exit codes: 0 ok, 1 findings or an unsatisfiable request, 2 hard failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from stepo.evaluation.benchmark import DEFAULT_KS, item_descriptors, materialize_paths, run_benchmark
from stepo.evaluation.dataset import DEFAULT_MIN_OUTFITS, DatasetError, ingest_dataset
from stepo.explain import ExplanationReport, canonical_json, render_text, trace_query
from stepo.kb.io import KBLoadError, build_kb, inspect_kb, load_kb
from stepo.pipeline import CONFIGS, PipelineConfig, recommend
from stepo.reasoning.adapter import ExternalPolicy, HttpTransport, SubprocessTransport
from stepo.reasoning.tree import NoFeasibleOutfit, SearchConfig
from stepo.rerank import RerankConfig
from stepo.retrieval import COMPLEMENT, user_preference_stats

log = logging.getLogger("stepo")

OK, FINDINGS, FAILURE = 0, 1, 2


def _csv(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    try:
        out = [int(x) for x in _csv(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("k values must be positive")
    return out


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


# -- pafa ----------------------------------------------------------------------------


def cmd_build(args) -> int:
    try:
        report = build_kb(args.src, args.out)
    except KBLoadError as exc:
        _err(str(exc))
        return FAILURE
    for f in report.findings:
        print(f)
    if not report.ok:
        print(f"{len(report.findings)} finding(s); nothing written")
        return FINDINGS
    print(f"built {args.out}")
    return OK


def cmd_validate(args) -> int:
    if not Path(args.kb).is_dir():
        _err(f"knowledge base directory not found: {args.kb}")
        return FAILURE
    try:
        _, report = inspect_kb(args.kb)
    except KBLoadError as exc:
        _err(str(exc))
        return FAILURE
    for f in report.findings:
        print(f)
    print("ok" if report.ok else f"{len(report.findings)} finding(s)")
    return OK if report.ok else FINDINGS


def pafa_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pafa", description="Build and validate fashion knowledge bases.")
    sub = p.add_subparsers(dest="cmd", required=True)
    b = sub.add_parser("build", help="compile a source directory into a canonical KB")
    b.add_argument("src")
    b.add_argument("out")
    b.set_defaults(func=cmd_build)
    v = sub.add_parser("validate", help="check a KB directory against its invariants")
    v.add_argument("kb")
    v.set_defaults(func=cmd_validate)
    return p


def pafa_main(argv=None) -> int:
    args = pafa_parser().parse_args(argv)
    return args.func(args)


# -- stepo ---------------------------------------------------------------------------


def load_history(kb_dir: Path, user: str, history: str | None) -> list[list[str]] | None:
    base = Path(history) if history else kb_dir / "users"
    path = base / user / "outfits.json"
    if not path.is_file() and history and Path(history).is_file():
        path = Path(history)
    if not path.is_file():
        return None
    return [list(o["item_ids"]) for o in json.loads(path.read_text(encoding="utf-8"))]


def make_policy(args, kb, session_id: str):
    if args.policy == "deterministic":
        return None
    if args.endpoint:
        transport = HttpTransport(args.endpoint)
    elif args.command:
        transport = SubprocessTransport(args.command)
    else:
        raise ValueError("--policy external needs --endpoint or --command")
    timeout = args.timeout_ms / 1000.0 if args.timeout_ms is not None else None
    return ExternalPolicy(transport, kb, timeout_s=timeout, session_id=session_id)


def cmd_recommend(args) -> int:
    try:
        kb = load_kb(args.kb)
    except KBLoadError as exc:
        _err(str(exc))
        return FAILURE
    if not kb.has_entity(args.anchor):
        _err(f"unknown anchor id {args.anchor!r}")
        return FAILURE
    anchor = kb.entity(args.anchor)
    try:
        history = load_history(Path(args.kb), args.user, args.history)
        profile = user_preference_stats(history or [], kb, args.user)
    except (KeyError, ValueError, OSError) as exc:
        _err(f"cannot read history for {args.user!r}: {exc}")
        return FAILURE
    session = f"{args.user}:{args.anchor}"
    try:
        policy = make_policy(args, kb, session)
    except ValueError as exc:
        _err(str(exc))
        return FAILURE
    search = SearchConfig(beam_width=args.beam, branching_cap=args.branching)
    config = PipelineConfig(search=search, rerank_config=RerankConfig())
    try:
        rec = recommend(kb, anchor, profile, config, policy=policy, session_id=session)
    except NoFeasibleOutfit as exc:
        _err(str(exc))
        print(canonical_json({"error": "no feasible outfit", "pruned": exc.pruned}), end="")
        return FINDINGS
    finally:
        if policy is not None:
            policy.close()
    pool = [e for e in kb.entities if e.role in COMPLEMENT.get(anchor.role, ())]
    paths = [c.path.attributes for c in rec.candidates]
    candidates = []
    for i, c in enumerate(rec.candidates):
        items = materialize_paths(paths[i:], pool, args.items, lambda e: item_descriptors(e, anchor, kb))
        candidates.append(
            {
                "rank": i + 1,
                "attributes": dict(c.path.attributes),
                "final": c.final,
                "preference": c.preference,
                "trend": c.trend,
                "path_score": c.path.path_score,
                "items": items,
            }
        )
    notes = list(rec.warnings)
    if history is None:
        notes.append(f"no history for user {args.user!r}; cold start")
    if rec.weights.cold_start:
        notes.append(f"cold start: default weights alpha={rec.weights.alpha}, beta={rec.weights.beta}")
    fallbacks = [vars(e) for e in getattr(policy, "events", [])]
    out = {
        "user_id": args.user,
        "anchor_id": anchor.id,
        "weights": {"alpha": rec.weights.alpha, "beta": rec.weights.beta, "cold_start": rec.weights.cold_start},
        "candidates": candidates,
        "notes": notes,
        "policy_fallbacks": fallbacks,
        "report": rec.report.to_dict(),
    }
    if args.report:
        Path(args.report).write_text(rec.report.to_json(), encoding="utf-8")
    if args.format == "json":
        print(canonical_json(out), end="")
    else:
        for c in candidates:
            attrs = ", ".join(f"{k}={v}" for k, v in c["attributes"].items())
            print(f"#{c['rank']} final={c['final']:.3f}  {attrs}")
            print(f"    items: {', '.join(c['items'])}")
        for n in notes:
            print(f"note: {n}")
        print()
        print(render_text(rec.report), end="")
    return OK


def cmd_evaluate(args) -> int:
    unknown = [c for c in args.configs if c not in CONFIGS]
    if unknown:
        _err(f"unknown configs {unknown}; choose from {sorted(CONFIGS)}")
        return FAILURE
    try:
        kb = load_kb(args.kb)
        dataset = ingest_dataset(args.dataset, args.min_outfits, args.split, args.seed)
    except (KBLoadError, DatasetError) as exc:
        _err(str(exc))
        return FAILURE
    base = PipelineConfig(search=SearchConfig(beam_width=args.beam, branching_cap=args.branching))
    reports = run_benchmark(dataset, kb, args.configs, args.k, base=base)
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for name, rep in reports.items():
        if out_dir:
            (out_dir / f"{name}.json").write_text(rep.to_json(), encoding="utf-8")
        recall = " ".join(f"R@{k}={v:.4f}" for k, v in sorted(rep.recall.items()))
        print(f"{name}: n={rep.n_samples} {recall} MAP={rep.map_standard:.4f} MAP(literal)={rep.map_paper_literal:.4f}")
    if not out_dir:
        print(canonical_json({n: r.to_dict() for n, r in reports.items()}), end="")
    return OK


def cmd_explain(args) -> int:
    try:
        doc = json.loads(Path(args.trace).read_text(encoding="utf-8"))
        report = ExplanationReport.from_dict(doc.get("report", doc))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        _err(f"cannot read trace {args.trace}: {exc}")
        return FAILURE
    if args.query is None:
        print(render_text(report) if args.format == "text" else report.to_json(), end="")
        return OK
    try:
        linked = trace_query(report, args.query)
    except KeyError as exc:
        _err(exc.args[0])
        return FINDINGS
    for x in sorted(linked):
        print(x)
    return OK


def stepo_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stepo", description="Knowledge-guided outfit recommendation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("recommend", help="recommend items to pair with an anchor")
    r.add_argument("--kb", required=True)
    r.add_argument("--user", required=True)
    r.add_argument("--anchor", required=True)
    r.add_argument("--history", help="directory holding <user>/outfits.json (default: <kb>/users)")
    r.add_argument("--policy", choices=("deterministic", "external"), default="deterministic")
    r.add_argument("--endpoint", help="HTTP URL of an external decision policy")
    r.add_argument("--command", help="command line of a subprocess decision policy")
    r.add_argument("--timeout-ms", type=int, help="adapter timeout (STEPO_POLICY_TIMEOUT_MS overrides)")
    r.add_argument("--beam", type=int, default=3)
    r.add_argument("--branching", type=int, default=8)
    r.add_argument("--items", type=int, default=3, help="catalog items listed per candidate")
    r.add_argument("--format", choices=("json", "text"), default="json")
    r.add_argument("--report", help="also write the explanation report JSON here")
    r.set_defaults(func=cmd_recommend)

    e = sub.add_parser("evaluate", help="benchmark pipeline configurations on a dataset")
    e.add_argument("--kb", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--configs", type=_csv, default=["full"])
    e.add_argument("--k", type=_ints, default=list(DEFAULT_KS))
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--min-outfits", type=int, default=DEFAULT_MIN_OUTFITS)
    e.add_argument("--split", type=float, default=0.8)
    e.add_argument("--beam", type=int, default=3)
    e.add_argument("--branching", type=int, default=8)
    e.add_argument("--out", help="directory for one <config>.json report each")
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("explain", help="render or query a saved explanation report")
    x.add_argument("--trace", required=True)
    x.add_argument("--query")
    x.add_argument("--format", choices=("json", "text"), default="text")
    x.set_defaults(func=cmd_explain)
    return p


def stepo_main(argv=None) -> int:
    args = stepo_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(stepo_main())
