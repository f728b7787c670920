"""A jointly divergent pair whose factors do not diverge on their own.

For the shape (1,1)^2 the first construction gives two templates.  Their
minimum goes to -infinity (the pair is jointly singular), yet each template
comes back to 0 once per window, so neither factor diverges on its own.
The first template spends a vanishing fraction of each window near 0, which
is escape on average with full proportion without divergence.

Run: python demos/divergent_pair.py
"""

from fractions import Fraction

from pgnlab.constructions import build_schedule, construction_I, verify_construction_I
from pgnlab.dimensions import SystemShape, dimension_report

shape = SystemShape([(1, 1), (1, 1)], [1, 1])
print("dimension of the jointly divergent set:", dimension_report(shape).dim_D)

S = build_schedule(shape, horizon=1.2e8)
print(f"first valid window k0 = {S.k0} (T = {S.T[S.k0]:.3g})")

C = 1
for T in (1e6, 1e7, 1e8):
    k = S.k_at(T)
    tt = construction_I(S, [k])
    rep = verify_construction_I(tt, S, [k])
    lo, hi = Fraction(S.T[k]), Fraction(S.T[k + 1])
    L1 = tt[0].component(1).restrict(lo, hi)
    L2 = tt[1].component(1).restrict(lo, hi)
    near = float(L1.measure_where(-C, 0)) / float(hi - lo)
    env = rep.find(k, "all", "envelope")
    print(f"T_k={S.T[k]:.3g}  gamma={S.gamma[k]:7.1f}  "
          f"max L1={float(L1.maximum()[0]):.1f}  max L2={float(L2.maximum()[0]):.1f}  "
          f"time with L1 in [-1,0]: {near:.5f}  "
          f"envelope max {env['envelope_max']:.2f} (bound {env['bound']:.2f})")
    print("   rates:", [round(r["delta_window"], 4) for r in rep.rows if r["quantity"] == "rate"])
