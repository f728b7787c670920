"""Solving the key inequality sum f_i(t) <= eps + sum f_i(sigma_i t).

Run: python demos/key_inequality.py
"""

from fractions import Fraction

from pgnlab.constructions import StepFunction, key_gap, lemma_key_solve

f1 = StepFunction((), (0,)).bounded()
f2 = StepFunction((2, 4), (0, 1, 0)).bounded()
sigmas, eps = [1, Fraction(1, 2)], Fraction(1, 10)
for t0 in (1, 3, 5):
    t = lemma_key_solve([f1, f2], sigmas, eps, t0)
    print(f"t0={t0}: t={t}  gap={key_gap([f1, f2], sigmas, eps, t)}")

# Four functions with shrinking dilations
fs = [StepFunction((3, 9), (1, 0, 2)).bounded(),
      StepFunction((5,), (2, 0)).bounded(),
      StepFunction((1, 40), (0, 3, 1)).bounded(),
      StepFunction((7,), (1, 2)).bounded()]
sigmas = [1, Fraction(3, 4), Fraction(1, 2), Fraction(1, 5)]
t = lemma_key_solve(fs, sigmas, Fraction(1, 5), 2)
print(f"four functions: t={t}  gap={key_gap(fs, sigmas, Fraction(1, 5), t)}")
