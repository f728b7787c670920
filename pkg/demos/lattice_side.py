"""The Diophantine side: successive minima along the diagonal flow.

A rational point falls into the cusp in a straight line, the golden ratio
stays bounded, and the witness scan and occupation fractions show what
"jointly singular" looks like at finite scales.

Run: python demos/lattice_side.py
"""

import math
from fractions import Fraction

import numpy as np

from pgnlab.dimensions import SystemShape
from pgnlab.latflow import cusp_occupation, h_trajectory, occupation_joint, scan_Q

grid = np.arange(0, 8.01, 1.0)
tr = h_trajectory(Fraction(2, 7), 1, 1, grid, first_only=True)
for t, h in zip(grid, tr.h1):
    print(f"2/7    t={t:4.1f}  h1={h:+.6f}  ln7-t={math.log(7) - t:+.6f}")

gold = (math.sqrt(5) - 1) / 2
tr = h_trajectory(gold, 1, 1, np.linspace(0, 15, 151), first_only=True)
print(f"golden ratio: min h1 on [0,15] = {tr.h1.min():.4f}")

# Witnesses |q theta - p| < eps/Q with q <= Q
for Q in (10, 100, 1000):
    print(f"Q={Q:5}: golden {scan_Q(gold, 0.1, Q)}, 2/7 {scan_Q(Fraction(2, 7), 0.1, Q)}")

print("cusp occupation of 2/7 (r=0.1, T=10):", round(cusp_occupation(Fraction(2, 7), 1, 1, 0.1, 10), 4))
pair = SystemShape([(1, 1), (1, 1)])
print("joint occupation (golden, 1/3):", round(occupation_joint([gold, Fraction(1, 3)], pair, 0.2, 8), 4))
print("joint occupation without 1/3:  ", round(occupation_joint([gold, Fraction(1, 3)], pair, 0.2, 8, exclude=1), 4))
