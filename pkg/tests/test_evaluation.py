import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stepo.evaluation import dataset as ds
from stepo.evaluation.benchmark import (
    compatibility_hook,
    held_out_samples,
    materialize_candidates,
    materialize_paths,
    pair_attributes,
    run_benchmark,
)
from stepo.evaluation.dataset import FULL_CORPUS_MIN_OUTFITS, DatasetError, Outfit, ingest_dataset, write_dataset
from stepo.evaluation.metrics import RankedList, average_precision, mean_average_precision, recall_at_k
from stepo.evaluation.synthetic import SyntheticSpec, generate
from stepo.kb import load_kb
from stepo.kb.io import parse_entity
from stepo.principles import score_color_pair, score_silhouette_pair

from kbfactory import garment

# -- dataset -------------------------------------------------------------------------


def pool():
    tops = [garment(f"t{i}", "shirt", "top", 0, 3, 50) for i in range(10)]
    bottoms = [garment(f"b{i}", "trousers", "bottom", 0, 2, 15) for i in range(5)]
    return [parse_entity(d) for d in tops + bottoms]


def hundred_outfits(user="u1"):
    return [Outfit(f"{user}_{n:03d}", (f"t{n % 10}", f"b{n % 5}")) for n in range(100)]


@pytest.fixture
def dataset_dir(tmp_path):
    outfits = {
        "u1": hundred_outfits() + [Outfit("single", ("t1",)), Outfit("two_bottoms", ("t1", "b1", "b2")), Outfit("no_top", ("b1", "b2"))],
        "small": [Outfit(f"s{n}", ("t0", "b0")) for n in range(5)],
    }
    write_dataset(tmp_path, pool(), outfits)
    return tmp_path


def test_split_counts_and_filters(dataset_dir):
    data = ingest_dataset(dataset_dir, min_outfits=10, split_ratio=0.8, seed=7)
    assert [u.user_id for u in data.users] == ["u1"]
    u = data.users[0]
    assert (len(u.train), len(u.test)) == (80, 20)
    ids = {o.outfit_id for o in u.train} | {o.outfit_id for o in u.test}
    assert len(ids) == 100 and not {"single", "two_bottoms", "no_top"} & ids
    assert not {o.outfit_id for o in u.train} & {o.outfit_id for o in u.test}


def test_split_is_deterministic_per_seed(dataset_dir):
    a = ingest_dataset(dataset_dir, seed=3)
    b = ingest_dataset(dataset_dir, seed=3)
    c = ingest_dataset(dataset_dir, seed=4)
    assert a == b
    assert a.users[0].test != c.users[0].test


def test_threshold_counts_complete_outfits_only(tmp_path):
    outfits = {"u": [Outfit(f"o{n}", ("t0", "b0")) for n in range(9)] + [Outfit("bad", ("t0",))]}
    write_dataset(tmp_path, pool(), outfits)
    with pytest.raises(DatasetError, match="at least 10"):
        ingest_dataset(tmp_path)
    assert len(ingest_dataset(tmp_path, min_outfits=9).users) == 1


def test_full_corpus_threshold_constant():
    assert FULL_CORPUS_MIN_OUTFITS == 250
    assert ds.DEFAULT_MIN_OUTFITS == 10


def test_malformed_records_have_locus(tmp_path):
    write_dataset(tmp_path, pool(), {"u": hundred_outfits("u")})
    path = tmp_path / "users" / "u" / "outfits.json"
    recs = json.loads(path.read_text())
    recs[3] = {"outfit_id": "x"}
    path.write_text(json.dumps(recs))
    with pytest.raises(DatasetError) as err:
        ingest_dataset(tmp_path)
    assert err.value.file == "users/u/outfits.json" and err.value.locus == "[3]"
    recs[3] = {"outfit_id": "x", "item_ids": ["t0", "ghost"]}
    path.write_text(json.dumps(recs))
    with pytest.raises(DatasetError, match="ghost"):
        ingest_dataset(tmp_path)
    (tmp_path / "items.json").write_text("[\n{")
    with pytest.raises(DatasetError) as err:
        ingest_dataset(tmp_path)
    assert err.value.file == "items.json" and err.value.locus.startswith("line")


def test_no_users_is_an_error(tmp_path):
    write_dataset(tmp_path, pool(), {})
    with pytest.raises(DatasetError):
        ingest_dataset(tmp_path)
    with pytest.raises(DatasetError, match="not found"):
        ingest_dataset(tmp_path / "missing")


@given(st.integers(min_value=0, max_value=60), st.floats(min_value=0, max_value=1), st.integers(0, 5))
def test_split_sizes_follow_ratio(n, ratio, seed):
    outfits = [Outfit(f"o{i}", ("t", "b")) for i in range(n)]
    train, test = ds.split_outfits(outfits, ratio, seed, "u")
    assert len(train) + len(test) == n
    assert abs(len(train) - ratio * n) <= 0.5
    assert sorted(train + test, key=lambda o: o.outfit_id) == sorted(outfits, key=lambda o: o.outfit_id)


def test_held_out_samples_anchor_on_bottom(dataset_dir):
    data = ingest_dataset(dataset_dir)
    samples = held_out_samples(data)
    assert len(samples) == 20
    assert all(s.anchor_id.startswith("b") and all(t.startswith("t") for t in s.truth) for s in samples)


# -- materialization ------------------------------------------------------------------


ATTRS = {"category": "shirt", "fit": "loose", "color_value": "grey", "length": "long"}


def fixture_pool():
    recs = [
        garment("m_quarter", "tee", "top", 0, 3, 50, fit="fit", name="grey"),
        garment("m_half_b", "shirt", "top", 0, 3, 50, fit="tight", name="grey"),
        garment("m_full", "shirt", "top", 0, 3, 50, fit="loose", length="long", name="grey"),
        garment("m_half_a", "shirt", "top", 0, 3, 50, fit="loose", name="charcoal"),
        garment("m_three", "shirt", "top", 0, 3, 50, fit="loose", name="grey"),
    ]
    return [parse_entity(r) for r in recs]


def test_materialize_fixture_order():
    out = materialize_candidates(ATTRS, fixture_pool(), 5)
    assert out == [("m_full", 1.0), ("m_three", 0.75), ("m_half_a", 0.5), ("m_half_b", 0.5), ("m_quarter", 0.25)]


def test_materialize_bounds():
    assert len(materialize_candidates(ATTRS, fixture_pool(), 50)) == 5
    assert materialize_candidates(ATTRS, fixture_pool(), 1) == [("m_full", 1.0)]
    with pytest.raises(ValueError, match="empty"):
        materialize_candidates(ATTRS, [], 3)


def test_materialize_paths_breaks_ties_with_later_paths():
    second = {"fit": "tight"}
    assert materialize_paths([{"category": "shirt"}, second], fixture_pool(), 2) == ["m_half_b", "m_full"]


# -- metrics --------------------------------------------------------------------------


def hand_lists():
    # ground truth at ranks 1, 2, 5 and nowhere
    return [
        RankedList.of(["g", "x1", "x2", "x3"], ["g"]),
        RankedList.of(["x1", "g", "x2"], ["g"]),
        RankedList.of(["x1", "x2", "x3", "x4", "g", "x5"], ["g"]),
        RankedList.of(["x1", "x2", "x3"], ["g"]),
    ]


def test_recall_hand_counts():
    lists = hand_lists()
    assert [recall_at_k(lists, k) for k in (1, 3, 5, 10)] == [0.25, 0.5, 0.75, 0.75]
    assert recall_at_k([RankedList.of(["g"], ["g"])] * 3, 1) == 1.0
    assert recall_at_k([RankedList.of(["x"], ["g"])], 10) == 0.0
    with pytest.raises(ValueError):
        recall_at_k(lists, 0)


def test_map_hand_values():
    lists = hand_lists()
    assert mean_average_precision(lists) == pytest.approx((1 + 1 / 2 + 1 / 5 + 0) / 4, abs=1e-12)
    assert mean_average_precision(lists, "paper_literal") == pytest.approx((1 + 1 / 4 + 1 / 25 + 0) / 4, abs=1e-12)


def test_two_relevant_fixture():
    rl = RankedList.of(["a", "x", "b", "y"], ["a", "b"])
    assert round(average_precision(rl), 4) == 0.8333
    assert round(average_precision(rl, "paper_literal"), 4) == 0.6111
    assert average_precision(rl) == pytest.approx((1 + 2 / 3) / 2, abs=1e-15)
    assert average_precision(rl, "paper_literal") == pytest.approx((1 + (2 / 3) / 3) / 2, abs=1e-15)


def test_map_excludes_samples_without_truth():
    lists = [RankedList.of(["a"], ["a"]), RankedList.of(["a"], [])]
    assert mean_average_precision(lists) == 1.0
    with pytest.raises(ValueError):
        average_precision(lists[0], "median")


ranked_lists = st.lists(st.text("abcdefgh", min_size=1, max_size=1), min_size=1, max_size=8, unique=True).flatmap(
    lambda items: st.builds(RankedList.of, st.permutations(items), st.sets(st.sampled_from(items + ["zz"]), min_size=1))
)


@given(st.lists(ranked_lists, min_size=1, max_size=6))
def test_recall_monotone_and_literal_below_standard(lists):
    rs = [recall_at_k(lists, k) for k in range(1, 10)]
    assert rs == sorted(rs)
    assert mean_average_precision(lists, "paper_literal") <= mean_average_precision(lists) + 1e-12
    assert 0 <= mean_average_precision(lists) <= 1


@given(st.lists(st.text("abcdefgh", min_size=1, max_size=1), min_size=1, max_size=8, unique=True).flatmap(
    lambda items: st.tuples(st.permutations(items), st.sets(st.sampled_from(items), min_size=1))
))
def test_map_one_iff_relevant_first(case):
    ranked, truth = case
    rl = RankedList.of(ranked, truth)
    first = set(ranked[: len(truth)]) == truth
    assert (mean_average_precision([rl]) == 1.0) == first


# -- compatibility hook ----------------------------------------------------------------


def exemplar_pair():
    shirt = parse_entity(garment("light_blue_shirt", "shirt", "top", 230, 24, 60, "H", "fit", name="light blue"))
    trousers = parse_entity(garment("dark_blue_trousers", "trousers", "bottom", 238, 20, 45, "H", "tight", "cropped", name="dark blue"))
    return shirt, trousers


def test_exemplar_pair_scores_high(sample_kb):
    shirt, trousers = exemplar_pair()
    assert compatibility_hook(shirt, trousers, sample_kb, "business") >= 0.8
    assert compatibility_hook(shirt, trousers, sample_kb) >= 0.8


def test_style_violation_zeroes_the_hook(sample_kb):
    blazer, jeans = sample_kb.entity("charcoal_blazer"), sample_kb.entity("ripped_jeans")
    assert compatibility_hook(blazer, jeans, sample_kb, "business") == 0.0
    assert compatibility_hook(blazer, jeans, sample_kb) > 0


def test_hook_default_equals_explicit_calls(sample_kb):
    ents = [e for e in sample_kb.entities]
    tops = [e for e in ents if e.role == "top"][:6]
    bottoms = [e for e in ents if e.role == "bottom"][:6]
    p = sample_kb.principle_params
    for t in tops:
        for b in bottoms:
            explicit = 0.5 * (score_silhouette_pair(t.silhouette, b.silhouette, p).total + score_color_pair(t.color, b.color, p).total)
            assert compatibility_hook(t, b, sample_kb) == explicit
    assert compatibility_hook(tops[0], bottoms[0], sample_kb, impl=lambda t, b, kb: 0.42) == 0.42
    assert pair_attributes(tops[0], bottoms[0], sample_kb)["tags"] == tops[0].tags | bottoms[0].tags


# -- benchmark ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_synthetic(tmp_path_factory):
    root = tmp_path_factory.mktemp("syn")
    kb_dir, data_dir = generate(root, SyntheticSpec(n_users=6, n_clusters=3, seed=1))
    return load_kb(kb_dir), ingest_dataset(data_dir)


def test_benchmark_is_deterministic(small_synthetic):
    kb, data = small_synthetic
    a = run_benchmark(data, kb, ["full", "no-rerank"], ks=(1, 3))
    b = run_benchmark(data, kb, ["full", "no-rerank"], ks=(1, 3))
    assert {k: v.to_json(True) for k, v in a.items()} == {k: v.to_json(True) for k, v in b.items()}
    report = a["full"]
    assert report.n_samples == 6 * 2 and not report.failures
    assert set(report.recall) == {1, 3}
    assert json.loads(report.to_json())["recall"].keys() == {"1", "3"}


def test_benchmark_rejects_unknown_config(small_synthetic):
    kb, data = small_synthetic
    with pytest.raises(ValueError, match="unknown configs"):
        run_benchmark(data, kb, ["everything"])


def test_benchmark_records_failures(small_synthetic):
    kb, data = small_synthetic

    def broken(ctx, actions):
        raise RuntimeError("policy down")

    with pytest.raises(RuntimeError, match="every sample failed"):
        run_benchmark(data, kb, ["full"], ks=(1,), policy=broken)
