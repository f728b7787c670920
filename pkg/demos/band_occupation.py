"""Band occupations in the second construction.

With delta = (1/4, 1/4) the joint minimum of the two templates sits in the
band [-1, 1] for about half of each window, and with either factor left out
for about three quarters.

Run: python demos/band_occupation.py
"""

from fractions import Fraction

from pgnlab.constructions import build_schedule, construction_II, verify_construction_II
from pgnlab.dimensions import SystemShape, dimension_report

shape = SystemShape([(1, 1), (1, 1)])
deltas = [Fraction(1, 4), Fraction(1, 4)]
print("dim with delta = 1/2:", dimension_report(shape, sum(deltas)).dim_D_delta)

S = build_schedule(shape, horizon=1.1e8, mode="II", deltas=deltas)
for T in (1e6, 1e7, 1e8):
    k = S.k_at(T)
    rep = verify_construction_II(construction_II(S, [k]), S, [k], 1)
    bands = {r["factor"]: round(r["occupation"], 4) for r in rep.rows if r["quantity"] == "band"}
    rates = [round(r["delta_window"], 4) for r in rep.rows if r["quantity"] == "rate"]
    print(f"T_k={S.T[k]:.3g}  q={[int(x) for x in S.q[k]]}  bands {bands}  rates {rates}")
