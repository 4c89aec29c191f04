"""Follow evidence back and forth through an explanation report."""

from stepo.explain import trace_query
from stepo.kb import load_kb, sample_kb_path
from stepo.pipeline import recommend
from stepo.retrieval import PreferenceProfile

kb = load_kb(sample_kb_path())
rec = recommend(kb, kb.entity("black_slim_straight_pants"), PreferenceProfile())
report = rec.report

for e in report.node_explanations:
    print(f"{e.node_id}\n    {e.rationale_text}")

# which decisions lean on each piece of evidence
print()
for ref in sorted(report.index_backward):
    print(f"{ref:<40} -> {', '.join(sorted(trace_query(report, ref)))}")
