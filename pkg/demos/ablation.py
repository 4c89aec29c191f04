"""Generate a small synthetic corpus and compare the four pipeline configurations."""

import tempfile

from stepo.evaluation.benchmark import run_benchmark
from stepo.evaluation.dataset import ingest_dataset
from stepo.evaluation.synthetic import SyntheticSpec, generate
from stepo.kb import load_kb

with tempfile.TemporaryDirectory() as tmp:
    kb_dir, data_dir = generate(tmp, SyntheticSpec(n_users=20, seed=0))
    kb = load_kb(kb_dir)
    data = ingest_dataset(data_dir)
    reports = run_benchmark(data, kb, ["full", "no-retrieval", "no-rerank", "reasoning-only"])

print(f"{'config':<16}" + "".join(f"R@{k:<6}" for k in (1, 3, 5, 10)) + "MAP    MAP(literal)")
for name, r in reports.items():
    recall = "".join(f"{r.recall[k]:<8.3f}" for k in (1, 3, 5, 10))
    print(f"{name:<16}{recall}{r.map_standard:<7.3f}{r.map_paper_literal:.3f}")
