import json
import shutil

import pytest

from stepo.cli import pafa_main, stepo_main
from stepo.evaluation.synthetic import SyntheticSpec, generate
from stepo.principles import check_style
from stepo.reasoning.policy import outfit_attributes

from conftest import ANCHOR, PERSONA
from kbfactory import base_docs, write_docs


def run(main, argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# -- pafa -----------------------------------------------------------------------------


def test_validate_sample_ok(sample_dir, capsys):
    code, out, _ = run(pafa_main, ["validate", sample_dir], capsys)
    assert code == 0 and out.strip() == "ok"


def test_validate_finding_exit_one(tmp_path, capsys):
    docs = base_docs()
    docs["scenario_style_matrix.json"]["values"][0][1] = 1.2
    code, out, _ = run(pafa_main, ["validate", write_docs(tmp_path, docs)], capsys)
    assert code == 1 and "compatibility out of [0,1]: 1.2" in out


def test_validate_broken_reference_exit_one(tmp_path, capsys):
    docs = base_docs()
    docs["cases.jsonl"][0]["item_ids"] = ["grey_shirt", "ghost"]
    code, out, _ = run(pafa_main, ["validate", write_docs(tmp_path, docs)], capsys)
    assert code == 1 and "ghost" in out


def test_validate_missing_directory_exit_two(tmp_path, capsys):
    code, _, err = run(pafa_main, ["validate", tmp_path / "nope"], capsys)
    assert code == 2 and "not found" in err


def test_build_round_trip(sample_dir, tmp_path, capsys):
    code, out, _ = run(pafa_main, ["build", sample_dir, tmp_path / "built"], capsys)
    assert code == 0
    assert run(pafa_main, ["validate", tmp_path / "built"], capsys)[0] == 0


# -- recommend -------------------------------------------------------------------------


def recommend_json(capsys, *extra, kb=None, user=PERSONA, anchor=ANCHOR):
    code, out, err = run(stepo_main, ["recommend", "--kb", kb, "--user", user, "--anchor", anchor, *extra], capsys)
    return code, (json.loads(out) if code == 0 else None), err


def test_persona_case_study(sample_dir, sample_kb, capsys):
    code, out, _ = recommend_json(capsys, kb=sample_dir)
    assert code == 0
    top = out["candidates"][0]
    attrs = top["attributes"]
    # the top-1 path passes the business style gate with a neutral or monochrome scheme
    assert attrs["scenario"] == "business" and attrs["style"] == "business"
    assert attrs["color_scheme"] in {"neutral", "monochromatic"}
    gate = check_style(outfit_attributes(attrs, sample_kb.entity(ANCHOR), sample_kb), sample_kb.constraints_for("business"))
    assert gate == 1
    assert attrs["fit"] in {"loose", "fit"}
    assert top["items"] and all(sample_kb.entity(i).role == "top" for i in top["items"])
    assert out["weights"] == {"alpha": 0.25, "beta": 0.75, "cold_start": False}
    assert len(out["report"]["node_explanations"]) == 8


def test_cold_start_user(sample_dir, capsys):
    code, out, _ = recommend_json(capsys, kb=sample_dir, user="nobody")
    assert code == 0
    assert out["weights"] == {"alpha": 0.7, "beta": 0.3, "cold_start": True}
    assert any("alpha=0.7, beta=0.3" in n for n in out["notes"])
    assert out["report"]["profile"]["cold_start"] is True


def test_unknown_anchor(sample_dir, capsys):
    code, _, err = recommend_json(capsys, kb=sample_dir, anchor="golden_cape")
    assert code == 2 and "golden_cape" in err


def test_infeasible_request_prints_pruning(tmp_path, capsys):
    docs = base_docs()
    docs["scenario_style_matrix.json"]["values"] = [[0.2, 0.3], [0.4, 0.1]]
    kb = write_docs(tmp_path, docs)
    code, out, err = run(stepo_main, ["recommend", "--kb", kb, "--user", "u", "--anchor", "anchor_pants"], capsys)
    assert code == 1 and "no feasible outfit" in err
    assert json.loads(out)["pruned"]


def test_external_policy_needs_target(sample_dir, capsys):
    code, _, err = recommend_json(capsys, "--policy", "external", kb=sample_dir)
    assert code == 2 and "--endpoint or --command" in err


def test_external_policy_fallbacks_are_reported(sample_dir, capsys, monkeypatch):
    monkeypatch.setenv("STEPO_POLICY_TIMEOUT_MS", "0")
    code, out, _ = recommend_json(capsys, "--policy", "external", "--command", "false", kb=sample_dir)
    assert code == 0 and out["policy_fallbacks"]


def test_recommend_is_deterministic_and_text_format(sample_dir, capsys, tmp_path):
    argv = ["recommend", "--kb", sample_dir, "--user", PERSONA, "--anchor", ANCHOR]
    first = run(stepo_main, argv, capsys)[1]
    assert run(stepo_main, argv, capsys)[1] == first
    code, text, _ = run(stepo_main, argv + ["--format", "text", "--report", tmp_path / "r.json"], capsys)
    assert code == 0 and text.startswith("#1 final=")
    assert (tmp_path / "r.json").read_text() == json.dumps(json.loads(first)["report"], sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# -- explain ---------------------------------------------------------------------------


def test_explain_trace_and_query(sample_dir, capsys, tmp_path):
    report_path = tmp_path / "report.json"
    run(stepo_main, ["recommend", "--kb", sample_dir, "--user", PERSONA, "--anchor", ANCHOR, "--report", report_path], capsys)
    report = json.loads(report_path.read_text())
    code, text, _ = run(stepo_main, ["explain", "--trace", report_path], capsys)
    assert code == 0 and "[scenario]" in text
    node, refs = next((k, v) for k, v in report["index_forward"].items() if v)
    code, out, _ = run(stepo_main, ["explain", "--trace", report_path, "--query", node], capsys)
    assert out.split() == sorted(refs)
    code, out, _ = run(stepo_main, ["explain", "--trace", report_path, "--query", refs[0]], capsys)
    assert node in out.split()
    code, _, err = run(stepo_main, ["explain", "--trace", report_path, "--query", "case:nowhere"], capsys)
    assert code == 1 and "not in report" in err
    code, _, _ = run(stepo_main, ["explain", "--trace", tmp_path / "missing.json"], capsys)
    assert code == 2


# -- evaluate --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def synthetic_dirs(tmp_path_factory):
    return generate(tmp_path_factory.mktemp("cli_syn"), SyntheticSpec(n_users=5, n_clusters=3, seed=2))


def test_evaluate_four_configs_four_ks(synthetic_dirs, capsys, tmp_path):
    kb, data = synthetic_dirs
    argv = ["evaluate", "--kb", kb, "--dataset", data, "--configs", "full,no-retrieval,no-rerank,reasoning-only", "--k", "1,3,5,10"]
    code, out, _ = run(stepo_main, argv + ["--out", tmp_path / "a"], capsys)
    assert code == 0 and len(out.strip().splitlines()) == 4
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["full.json", "no-rerank.json", "no-retrieval.json", "reasoning-only.json"]
    for f in files:
        rep = json.loads((tmp_path / "a" / f).read_text())
        assert set(rep["recall"]) == {"1", "3", "5", "10"}
        assert set(rep) == {"config", "n_samples", "recall", "map_standard", "map_paper_literal", "failures"}
    run(stepo_main, argv + ["--out", tmp_path / "b"], capsys)
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_evaluate_errors(synthetic_dirs, capsys, tmp_path):
    kb, data = synthetic_dirs
    code, _, err = run(stepo_main, ["evaluate", "--kb", kb, "--dataset", data, "--configs", "turbo"], capsys)
    assert code == 2 and "turbo" in err
    code, _, err = run(stepo_main, ["evaluate", "--kb", kb, "--dataset", tmp_path / "none"], capsys)
    assert code == 2
    with pytest.raises(SystemExit):
        stepo_main(["evaluate", "--kb", str(kb), "--dataset", str(data), "--k", "0,1"])
    code, _, err = run(stepo_main, ["evaluate", "--kb", kb, "--dataset", data, "--min-outfits", "250"], capsys)
    assert code == 2 and "250" in err


def test_console_scripts_installed():
    assert shutil.which("stepo") and shutil.which("pafa")
