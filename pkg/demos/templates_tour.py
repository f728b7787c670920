"""A short tour of templates: build standard blocks, validate them and read
off their average contraction rates.

Run: python demos/templates_tour.py
"""

from fractions import Fraction

from pgnlab.templates import (
    average_contraction,
    check_admissible,
    standard_template,
    standard_template_seq,
    trivial_template,
    validate_template,
)

# The trivial template never moves, so the rate is the full m*n.
for m, n in [(1, 1), (1, 2), (2, 2)]:
    L = trivial_template(m, n, 100)
    print(f"trivial {m}x{n}: rate {average_contraction(L)}")

# A (1,1) V: L_1 goes down to -5 and comes back.  Its rate is exactly 1/2.
V = standard_template((0, 0), (10, 0), 1, 1)
print("V minimum (value, time):", V.component(1).minimum())
print("V rate:", average_contraction(V))

# Long blocks approach mn - mn/(m+n); the defect shrinks like eps/dt.
for m, n in [(1, 2), (2, 2), (2, 3)]:
    eps = Fraction(1)
    for dt in (100, 1000, 10000):
        L = standard_template((0, eps), (dt, eps), m, n)
        target = m * n - Fraction(m * n, m + n)
        print(f"{m}x{n} dt={dt:>5}: rate {float(average_contraction(L)):.5f}  target {float(target):.5f}")

# Admissibility: a pair that climbs too fast is rejected with the reason.
print(check_admissible((0, 0), (1, 2), 1, 2))

# Sequences of blocks are templates when every junction is convex.
pts = [(0, 2), (36, 2), (72, 0), (108, 2)]
L = standard_template_seq(pts, 2, 1)
print("sequence segments:", L.n_segments, "violations:", validate_template(L))
