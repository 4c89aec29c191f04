"""Walk through the color and silhouette scorers on a few hand-picked pairs."""

from stepo.kb.model import ColorSpec, SilhouetteSpec
from stepo.principles import (
    PrincipleParams,
    balance,
    classify_harmony,
    golden_ratio_score,
    score_color_pair,
    score_silhouette_pair,
)

params = PrincipleParams()

# light blue shirt over dark blue trousers: close hues, moderate lightness gap
shirt = ColorSpec(230, 24, 60, name="light_blue")
trousers = ColorSpec(238, 20, 45, name="dark_blue")
rust = ColorSpec(40, 45, 50, name="rust")
black = ColorSpec(0, 2, 12, name="black")

for a, b in [(shirt, trousers), (shirt, rust), (rust, black)]:
    s = score_color_pair(a, b, params)
    h = classify_harmony(a, b, params)
    parts = " ".join(f"{v:.3f}" for v in s.c)
    print(f"{a.name:>10} + {b.name:<10} color={s.total:.3f} [{parts}] scheme={h.scheme} dE={h.delta_e:.1f}")

print()
pairs = [
    (SilhouetteSpec("H", "fit", 1.0, "regular"), SilhouetteSpec("H", "tight", 1.0, "cropped")),
    (SilhouetteSpec("Y", "fit", 1.0, "regular"), SilhouetteSpec("A", "fit", 1.0, "regular")),
    (SilhouetteSpec("H", "tight", 1.0, "regular"), SilhouetteSpec("H", "tight", 1.0, "regular")),
    (SilhouetteSpec("H", "tight", 1.0, "regular"), SilhouetteSpec("H", "loose", 1.0, "regular")),
]
for top, bottom in pairs:
    s = score_silhouette_pair(top, bottom, params)
    print(f"{top.shape}/{top.fit:<5} over {bottom.shape}/{bottom.fit:<5} pair={s.total:.3f} balance={balance(top, bottom, params):.3f}")

# the proportion term peaks where the upper part takes about 61.8% of the length
print()
for split in (0.4, 0.5, 0.618, 0.7, 0.8):
    print(f"split {split:.3f} -> {golden_ratio_score(split):.3f}")
