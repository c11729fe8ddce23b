"""Exact Clarke cone against the sampling oracle on the square direction grid.

Usage: python3 scripts/agreement_table.py [trials] [per_side]
"""
import sys
import time
from fractions import Fraction

from clarkekit.gallery import GALLERY_SETS, gallery_set
from clarkekit.oracle import clarke_agreement, square_directions
from clarkekit.sets import clarke_tangent_cone

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 500
per_side = int(sys.argv[2]) if len(sys.argv) > 2 else 16
dirs = square_directions(per_side)
eps, delta, lam = Fraction(1, 16), Fraction(1, 8), Fraction(1, 16)

print(f"{'set':20s} {'cone generators':30s} members  disagree  inconclusive  seconds")
for name in GALLERY_SETS:
    u = gallery_set(name)
    start = time.perf_counter()
    r = clarke_agreement(u, dirs, eps, delta, lam, trials=trials, seed=0)
    gens = " ".join("(" + ",".join(str(x) for x in g) + ")" for g in clarke_tangent_cone(u).v_rep) or "{0}"
    members = sum(m for _, m, _ in r.rows)
    print(f"{name:20s} {gens:30s} {members:7d}  {len(r.disagreements):8d}  {r.inconclusive_fraction:12.1%}"
          f"  {time.perf_counter() - start:7.1f}")
