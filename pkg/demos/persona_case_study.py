"""One user, one anchor garment: retrieve, search, rerank and explain.

Run from the repository root after installing the package.
"""

import json

from stepo.explain import render_text
from stepo.kb import load_kb, sample_kb_path
from stepo.pipeline import recommend
from stepo.retrieval import user_preference_stats

root = sample_kb_path()
kb = load_kb(root)
user = "persona_business"
anchor = kb.entity("black_slim_straight_pants")

history = json.loads((root / "users" / user / "outfits.json").read_text())
profile = user_preference_stats([o["item_ids"] for o in history], kb, user)
print(f"{len(history)} past outfits, trend rate {profile.trend_match_rate:.2f}")

rec = recommend(kb, anchor, profile, session_id="demo")
print(f"weights alpha={rec.weights.alpha} beta={rec.weights.beta}")
print(f"retrieved {len(rec.knowledge.items)} knowledge items via {rec.inference['route']}")

for cand in rec.candidates[:3]:
    attrs = ", ".join(f"{k}={v}" for k, v in cand.path.attributes.items())
    print(f"final={cand.final:.3f} pref={cand.preference:.3f} trend={cand.trend:.3f}  {attrs}")

print()
print(render_text(rec.report))
