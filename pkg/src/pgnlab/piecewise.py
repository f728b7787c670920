"""Continuous piecewise-linear functions of one variable with exact arithmetic.

Used for single template coordinates, their time-rescalings ``t -> L(a t)``
and lower envelopes of several of them.
"""

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from ._exact import to_fraction


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous function interpolating ``ys`` at the nodes ``xs``."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        xs = tuple(to_fraction(x) for x in self.xs)
        ys = tuple(to_fraction(y) for y in self.ys)
        if len(xs) < 2 or len(xs) != len(ys):
            raise ValueError("need at least two nodes and one value per node")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("nodes must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def domain(self):
        return self.xs[0], self.xs[-1]

    @property
    def slopes(self):
        return tuple((y1 - y0) / (x1 - x0)
                     for x0, x1, y0, y1 in zip(self.xs, self.xs[1:], self.ys, self.ys[1:]))

    def __call__(self, t):
        t = to_fraction(t)
        a, b = self.domain
        if t < a or t > b:
            raise ValueError(f"{t} outside domain [{a}, {b}]")
        i = min(bisect_right(self.xs, t) - 1, len(self.xs) - 2)
        x0, x1 = self.xs[i], self.xs[i + 1]
        y0, y1 = self.ys[i], self.ys[i + 1]
        return y0 + (y1 - y0) * (t - x0) / (x1 - x0)

    def values_at_sorted(self, ts):
        """Evaluate at an increasing sequence of points with a single sweep."""
        out = []
        i = 0
        last = len(self.xs) - 2
        for t in ts:
            while i < last and self.xs[i + 1] <= t:
                i += 1
            x0, x1 = self.xs[i], self.xs[i + 1]
            if t < self.xs[0] or t > self.xs[-1]:
                raise ValueError(f"{t} outside domain {self.domain}")
            y0, y1 = self.ys[i], self.ys[i + 1]
            if t == x0:
                out.append(y0)
            elif t == x1:
                out.append(y1)
            else:
                out.append(y0 + (y1 - y0) * (t - x0) / (x1 - x0))
        return out

    def restrict(self, a, b):
        a, b = to_fraction(a), to_fraction(b)
        lo, hi = self.domain
        if not (lo <= a < b <= hi):
            raise ValueError(f"[{a}, {b}] not inside domain [{lo}, {hi}]")
        inner = [x for x in self.xs if a < x < b]
        xs = [a] + inner + [b]
        return PiecewiseLinear(tuple(xs), tuple(self.values_at_sorted(xs)))

    def compose_scale(self, a):
        """The function ``t -> self(a * t)`` for a positive constant ``a``."""
        a = to_fraction(a)
        if a <= 0:
            raise ValueError("time scale must be positive")
        return PiecewiseLinear(tuple(x / a for x in self.xs), self.ys)

    def maximum(self):
        """Exact maximum and the first node attaining it."""
        i = max(range(len(self.ys)), key=lambda k: (self.ys[k], -k))
        return self.ys[i], self.xs[i]

    def minimum(self):
        i = min(range(len(self.ys)), key=lambda k: (self.ys[k], k))
        return self.ys[i], self.xs[i]

    def integral(self):
        return sum(((y0 + y1) / 2 * (x1 - x0)
                    for x0, x1, y0, y1 in zip(self.xs, self.xs[1:], self.ys, self.ys[1:])),
                   Fraction(0))

    def measure_where(self, lo, hi):
        """Lebesgue measure of ``{t : lo <= f(t) <= hi}``, computed exactly."""
        lo, hi = to_fraction(lo), to_fraction(hi)
        total = Fraction(0)
        for x0, x1, y0, y1 in zip(self.xs, self.xs[1:], self.ys, self.ys[1:]):
            if y0 == y1:
                if lo <= y0 <= hi:
                    total += x1 - x0
                continue
            # parameter u in [0, 1] along the piece; the value is affine in u
            u_lo = (lo - y0) / (y1 - y0)
            u_hi = (hi - y0) / (y1 - y0)
            if u_lo > u_hi:
                u_lo, u_hi = u_hi, u_lo
            u_lo, u_hi = max(u_lo, Fraction(0)), min(u_hi, Fraction(1))
            if u_hi > u_lo:
                total += (u_hi - u_lo) * (x1 - x0)
        return total


def lower_envelope(funcs, window=None):
    """Pointwise minimum of several functions as an exact PiecewiseLinear.

    The merged node grid is refined by every pairwise crossing, so the result
    is linear between its nodes and its maximum sits on a node.
    """
    funcs = list(funcs)
    if not funcs:
        raise ValueError("need at least one function")
    if window is None:
        a = max(f.domain[0] for f in funcs)
        b = min(f.domain[1] for f in funcs)
    else:
        a, b = (to_fraction(w) for w in window)
    if not a < b:
        raise ValueError("empty window")
    grid = sorted({a, b}.union(*({x for x in f.xs if a < x < b} for f in funcs)))
    vals = [f.values_at_sorted(grid) for f in funcs]

    xs, ys = [], []
    for k in range(len(grid) - 1):
        u, v = grid[k], grid[k + 1]
        at_u = [col[k] for col in vals]
        at_v = [col[k + 1] for col in vals]
        cuts = set()
        for i in range(len(funcs)):
            for j in range(i + 1, len(funcs)):
                du = at_u[i] - at_u[j]
                dv = at_v[i] - at_v[j]
                if (du < 0 < dv) or (dv < 0 < du):
                    cuts.add(u + (v - u) * du / (du - dv))
        xs.append(u)
        ys.append(min(at_u))
        for c in sorted(cuts):
            frac = (c - u) / (v - u)
            xs.append(c)
            ys.append(min(p + (q - p) * frac for p, q in zip(at_u, at_v)))
    xs.append(grid[-1])
    ys.append(min(col[-1] for col in vals))
    return PiecewiseLinear(tuple(xs), tuple(ys))
