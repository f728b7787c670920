"""Piecewise-linear templates and their contraction rates.

A template is stored exactly: breakpoint times, start values and per-segment
slopes are all :class:`fractions.Fraction`.  Float inputs are converted
without rounding, so every derived quantity (values at breakpoints, class
decompositions, window averages) is an exact rational.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
import json

from ._exact import fraction_from_json, fraction_to_json, to_fraction
from .piecewise import PiecewiseLinear, lower_envelope


class TemplateError(Exception):
    pass


class InadmissiblePair(TemplateError):
    def __init__(self, message, index=None, admissibility=None):
        super().__init__(message)
        self.index = index
        self.admissibility = admissibility


class InvalidTemplate(TemplateError):
    def __init__(self, message, report=()):
        super().__init__(message)
        self.report = list(report)


class NonIntegerClassSlope(TemplateError):
    pass


@dataclass(frozen=True)
class Template:
    """An ``m x n`` piecewise-linear map on ``[breakpoints[0], breakpoints[-1]]``.

    ``slopes[k][j]`` is the slope of coordinate ``j`` (0-based) on segment
    ``k``; values at later breakpoints follow by propagation.
    """

    m: int
    n: int
    breakpoints: tuple
    start_values: tuple
    slopes: tuple

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        bps = tuple(to_fraction(t) for t in self.breakpoints)
        start = tuple(to_fraction(v) for v in self.start_values)
        slopes = tuple(tuple(to_fraction(s) for s in seg) for seg in self.slopes)
        d = self.m + self.n
        if len(bps) < 2 or any(b <= a for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing, at least two")
        if len(start) != d:
            raise ValueError(f"need {d} start values, got {len(start)}")
        if len(slopes) != len(bps) - 1 or any(len(seg) != d for seg in slopes):
            raise ValueError("need one slope vector of length m+n per segment")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "start_values", start)
        object.__setattr__(self, "slopes", slopes)

    @classmethod
    def from_values(cls, m, n, breakpoints, values):
        """Build from the values at every breakpoint (slopes are derived)."""
        bps = [to_fraction(t) for t in breakpoints]
        vals = [tuple(to_fraction(v) for v in row) for row in values]
        if len(vals) != len(bps):
            raise ValueError("one value vector per breakpoint required")
        slopes = []
        for k in range(len(bps) - 1):
            dt = bps[k + 1] - bps[k]
            slopes.append(tuple((b - a) / dt for a, b in zip(vals[k], vals[k + 1])))
        tmpl = cls(m, n, tuple(bps), vals[0], tuple(slopes))
        # the propagated values are the given ones, so seed the cache
        tmpl.__dict__["values"] = tuple(vals)
        return tmpl

    @property
    def d(self):
        return self.m + self.n

    @property
    def domain(self):
        return self.breakpoints[0], self.breakpoints[-1]

    @property
    def n_segments(self):
        return len(self.slopes)

    @cached_property
    def values(self):
        rows = [self.start_values]
        for k, seg in enumerate(self.slopes):
            dt = self.breakpoints[k + 1] - self.breakpoints[k]
            rows.append(tuple(v + s * dt for v, s in zip(rows[-1], seg)))
        return tuple(rows)

    def value_at(self, t):
        t = to_fraction(t)
        a, b = self.domain
        if t < a or t > b:
            raise ValueError(f"{t} outside [{a}, {b}]")
        k = _segment_index(self.breakpoints, t)
        dt = t - self.breakpoints[k]
        return tuple(v + s * dt for v, s in zip(self.values[k], self.slopes[k]))

    def component(self, j):
        """Coordinate ``L_j`` (1-based) as a PiecewiseLinear."""
        if not 1 <= j <= self.d:
            raise IndexError(j)
        return PiecewiseLinear(self.breakpoints, tuple(row[j - 1] for row in self.values))

    def restrict(self, a, b):
        a, b = to_fraction(a), to_fraction(b)
        lo, hi = self.domain
        if not (lo <= a < b <= hi):
            raise ValueError(f"[{a}, {b}] not inside [{lo}, {hi}]")
        k0 = _segment_index(self.breakpoints, a)
        k1 = _segment_index(self.breakpoints, b, right=True)
        bps = [a] + [t for t in self.breakpoints[k0 + 1:k1 + 1]] + [b]
        return Template(self.m, self.n, tuple(bps), self.value_at(a), self.slopes[k0:k1 + 1])

    @classmethod
    def concatenate(cls, pieces):
        """Join templates on abutting intervals; values must agree at junctions."""
        pieces = list(pieces)
        if not pieces:
            raise ValueError("nothing to concatenate")
        m, n = pieces[0].m, pieces[0].n
        bps = list(pieces[0].breakpoints)
        vals = list(pieces[0].values)
        slopes = list(pieces[0].slopes)
        for idx, p in enumerate(pieces[1:], start=1):
            if (p.m, p.n) != (m, n):
                raise ValueError("all pieces must share (m, n)")
            if p.breakpoints[0] != bps[-1]:
                raise ValueError(f"piece {idx} starts at {p.breakpoints[0]}, expected {bps[-1]}")
            if p.values[0] != vals[-1]:
                raise InvalidTemplate(f"discontinuity at t={bps[-1]} joining piece {idx}")
            bps.extend(p.breakpoints[1:])
            vals.extend(p.values[1:])
            slopes.extend(p.slopes)
        out = cls(m, n, tuple(bps), vals[0], tuple(slopes))
        out.__dict__["values"] = tuple(vals)
        return out

    def simplified(self):
        """Merge neighbouring segments that carry identical slope vectors."""
        bps = [self.breakpoints[0]]
        slopes = []
        vals = [self.values[0]]
        for k, seg in enumerate(self.slopes):
            if slopes and slopes[-1] == seg:
                bps[-1] = self.breakpoints[k + 1]
                vals[-1] = self.values[k + 1]
            else:
                slopes.append(seg)
                bps.append(self.breakpoints[k + 1])
                vals.append(self.values[k + 1])
        out = Template(self.m, self.n, tuple(bps), self.start_values, tuple(slopes))
        out.__dict__["values"] = tuple(vals)
        return out

    def to_json_dict(self):
        return {
            "m": self.m,
            "n": self.n,
            "breakpoints": [fraction_to_json(t) for t in self.breakpoints],
            "startValues": [fraction_to_json(v) for v in self.start_values],
            "slopes": [[[s.numerator, s.denominator] for s in seg] for seg in self.slopes],
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, obj):
        try:
            m, n = obj["m"], obj["n"]
            bps = obj["breakpoints"]
            start = obj["startValues"]
            slopes = obj["slopes"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"template JSON missing field: {exc}") from None
        if not (isinstance(m, int) and isinstance(n, int)):
            raise ValueError("m and n must be integers")
        return cls(m, n,
                   tuple(fraction_from_json(t) for t in bps),
                   tuple(fraction_from_json(v) for v in start),
                   tuple(tuple(fraction_from_json(s) for s in seg) for seg in slopes))

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


def _segment_index(bps, t, right=False):
    """Index k of the segment [bps[k], bps[k+1]] holding t.

    At an interior breakpoint the later segment is chosen, or the earlier one
    when ``right`` is set.
    """
    lo, hi = 0, len(bps) - 2
    if right:
        while lo < hi:
            mid = (lo + hi) // 2
            if bps[mid + 1] < t:
                lo = mid + 1
            else:
                hi = mid
        return lo
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if bps[mid] <= t:
            lo = mid
        else:
            hi = mid - 1
    return lo


def trivial_template(m, n, T, start=0):
    """The constant zero template on ``[start, start + T]``."""
    t0 = to_fraction(start)
    T = to_fraction(T)
    if T <= 0:
        raise ValueError("T must be positive")
    d = m + n
    return Template(m, n, (t0, t0 + T), (Fraction(0),) * d, ((Fraction(0),) * d,))


def z_set(m, n, j):
    """Allowed slopes ``k1/m - k2/n`` of ``F_j`` with ``k1 + k2 = j``."""
    if not 1 <= j <= m + n:
        raise ValueError(f"j must lie in [1, {m + n}]")
    return frozenset(Fraction(k1, m) - Fraction(j - k1, n)
                     for k1 in range(max(0, j - n), min(m, j) + 1))


# --- validation -----------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    location: int
    coordinate: int = 0
    detail: str = ""

    def __str__(self):
        where = f"index {self.location}"
        if self.coordinate:
            where += f", j={self.coordinate}"
        return f"{self.kind} at {where}: {self.detail}"


def _tied(a, b, tol):
    return abs(b - a) <= tol


def validate_template(L, tol=0):
    """List every violation of the three template conditions.

    ``tol`` is the equality tolerance for value comparisons; slope checks
    are always exact.  An empty list means ``L`` is a template.
    """
    tol = to_fraction(tol)
    m, n, d = L.m, L.n, L.d
    vals = L.values
    report = []
    lo_slope, hi_slope = Fraction(-1, n), Fraction(1, m)

    for k, row in enumerate(vals):
        for j in range(d - 1):
            if row[j] > row[j + 1] + tol:
                report.append(Violation("UnorderedValues", k, j + 1,
                                        f"L_{j + 1}={row[j]} > L_{j + 2}={row[j + 1]}"))

    for k, seg in enumerate(L.slopes):
        for j, s in enumerate(seg):
            if not lo_slope <= s <= hi_slope:
                report.append(Violation("SlopeOutOfRange", k, j + 1, f"slope {s}"))
        if sum(seg) != 0:
            report.append(Violation("SumNotConstant", k, d, f"slope of F_{d} is {sum(seg)}"))

    for j in range(1, d):
        zj = z_set(m, n, j)
        prev = None  # slope of F_j on the previous strict segment
        for k, seg in enumerate(L.slopes):
            strict = not (_tied(vals[k][j - 1], vals[k][j], tol)
                          and _tied(vals[k + 1][j - 1], vals[k + 1][j], tol))
            if not strict:
                prev = None
                continue
            fj = sum(seg[:j])
            if fj not in zj:
                report.append(Violation("FjSlopeNotInZ", k, j, f"slope {fj} not in Z({j})"))
            if prev is not None and fj < prev:
                report.append(Violation("FjNotConvex", k, j,
                                        f"slope drops {prev} -> {fj} at t={L.breakpoints[k]}"))
            # a touching point at the right end ends the run
            prev = None if _tied(vals[k + 1][j - 1], vals[k + 1][j], tol) else fj
    return report


# --- slope classes and contraction rates ------------------------------------

@dataclass(frozen=True)
class SlopeClass:
    first: int          # 1-based index of the lowest coordinate in the class
    last: int
    slope: Fraction     # slope of the lowest coordinate
    slope_sum: Fraction
    k1: int
    k2: int

    @property
    def size(self):
        return self.last - self.first + 1


@dataclass(frozen=True)
class SlopeClassDecomposition:
    segment: int
    classes: tuple

    @property
    def delta(self):
        """Contraction rate on this segment.

        With classes ordered bottom to top, each unit of ``k2`` in a class
        contributes the number of ``k1`` units at or below that class.
        """
        total, k1_below = 0, 0
        for c in self.classes:
            k1_below += c.k1
            total += c.k2 * k1_below
        return total


def class_decomposition(L, segment, tol=0):
    m, n = L.m, L.n
    tol = to_fraction(tol)
    v0, v1 = L.values[segment], L.values[segment + 1]
    seg = L.slopes[segment]
    groups = [[0]]
    for j in range(1, L.d):
        if _tied(v0[j - 1], v0[j], tol) and _tied(v1[j - 1], v1[j], tol):
            groups[-1].append(j)
        else:
            groups.append([j])
    scale = Fraction(m * n, m + n)
    classes = []
    for g in groups:
        ssum = sum(seg[j] for j in g)
        k1 = (ssum + Fraction(len(g), n)) * scale
        k2 = len(g) - k1
        if k1.denominator != 1 or not (0 <= k1 <= m and 0 <= k2 <= n):
            raise NonIntegerClassSlope(
                f"segment {segment}: class {g[0] + 1}..{g[-1] + 1} has slope sum {ssum}")
        classes.append(SlopeClass(g[0] + 1, g[-1] + 1, seg[g[0]], ssum, int(k1), int(k2)))
    return SlopeClassDecomposition(segment, tuple(classes))


@dataclass(frozen=True)
class RateProfile:
    breakpoints: tuple
    deltas: tuple

    @property
    def lengths(self):
        return tuple(b - a for a, b in zip(self.breakpoints, self.breakpoints[1:]))

    def integral(self, a, b):
        """Exact integral of the contraction rate over ``[a, b]``."""
        a, b = to_fraction(a), to_fraction(b)
        lo, hi = self.breakpoints[0], self.breakpoints[-1]
        if not (lo <= a <= b <= hi):
            raise ValueError(f"[{a}, {b}] not inside [{lo}, {hi}]")
        total = Fraction(0)
        if a == b:
            return total
        k = _segment_index(self.breakpoints, a)
        while k < len(self.deltas) and self.breakpoints[k] < b:
            left = max(a, self.breakpoints[k])
            right = min(b, self.breakpoints[k + 1])
            if right > left:
                total += self.deltas[k] * (right - left)
            k += 1
        return total

    def average(self, window=None):
        if window is None:
            window = (self.breakpoints[0], self.breakpoints[-1])
        a, b = (to_fraction(w) for w in window)
        if not b > a:
            raise ValueError("window must have positive length")
        return self.integral(a, b) / (b - a)


def contraction_rate(L, tol=0):
    deltas = tuple(class_decomposition(L, k, tol).delta for k in range(L.n_segments))
    return RateProfile(L.breakpoints, deltas)


def average_contraction(L, window=None, tol=0):
    """Window average of the contraction rate (whole domain by default)."""
    return contraction_rate(L, tol).average(window)


@dataclass(frozen=True)
class LowerAverage:
    value: Fraction
    at: Fraction
    grid: tuple


def lower_average_estimate(L, horizon, phi, tol=0):
    """Finite-horizon stand-in for ``liminf_T Delta(L, T)``.

    Minimises ``Delta(L, [t0, T'])`` over breakpoint-aligned ``T'`` in
    ``[t0 + phi (T - t0), T]``.  Between breakpoints the running average is
    monotone, so the minimum over the whole tail is attained on this grid.
    """
    phi = to_fraction(phi)
    if not 0 < phi < 1:
        raise ValueError("phi must lie in (0, 1)")
    prof = contraction_rate(L, tol)
    t0 = L.domain[0]
    T = to_fraction(horizon)
    if not t0 < T <= L.domain[1]:
        raise ValueError("horizon must lie inside the domain")
    start = t0 + phi * (T - t0)
    grid = [start] + [t for t in L.breakpoints if start < t < T] + [T]
    best = None
    running = prof.integral(t0, start)
    prev = start
    for t in grid:
        running += prof.integral(prev, t)
        prev = t
        avg = running / (t - t0)
        if best is None or avg < best[0]:
            best = (avg, t)
    return LowerAverage(best[0], best[1], tuple(grid))


# --- admissible pairs and standard templates --------------------------------

@dataclass(frozen=True)
class Admissibility:
    cond1: bool
    cond2: bool
    cond3: bool
    by_ladm: bool
    reasons: tuple = field(default=())

    @property
    def literal(self):
        return self.cond1 and self.cond2 and self.cond3

    @property
    def admissible(self):
        return self.literal or self.by_ladm

    @property
    def verdict(self):
        if self.literal:
            return "admissible"
        if self.by_ladm:
            return "admissible_by_ladm"
        return "inadmissible"


def check_admissible(p1, p2, m, n):
    """Evaluate the three admissibility conditions and the sufficient gap test.

    For ``m = n = 1`` the second condition is taken as vacuous.  The third
    condition can then only hold at height zero, so positive-height pairs
    for 1x1 factors are accepted through the gap test alone
    (``verdict == "admissible_by_ladm"``).
    """
    t1, e1 = (to_fraction(x) for x in p1)
    t2, e2 = (to_fraction(x) for x in p2)
    if not t2 > t1:
        raise ValueError("need t'' > t'")
    if e1 < 0 or e2 < 0:
        raise ValueError("heights must be nonnegative")
    dt, de = t2 - t1, e2 - e1
    reasons = []
    c1 = -dt / m <= de <= dt / n
    if not c1:
        reasons.append(f"cond1: need {-dt / m} <= {de} <= {dt / n}")
    c2 = True
    if (m, n) != (1, 1):
        if m == 1 and de < -Fraction(n - 1, 2 * n) * dt:
            c2 = False
        if n == 1 and de > Fraction(m - 1, 2 * m) * dt:
            c2 = False
        if not c2:
            reasons.append("cond2 fails")
    c3 = ((n - 1) * (dt / n - de) >= (m + n) * e1
          or (m - 1) * (dt / m + de) >= (m + n) * e2)
    if not c3:
        reasons.append("cond3 fails")
    ladm = dt >= (m + n) ** 2 * max(e1, e2)
    return Admissibility(c1, c2, c3, ladm, tuple(reasons))


def _two_slope(t, t1, e1, first_slope, switch, second_slope):
    if t <= t1 + switch:
        return -e1 + first_slope * (t - t1)
    return -e1 + first_slope * switch + second_slope * (t - t1 - switch)


def standard_template(p1, p2, m, n):
    """Standard template joining two admissible points ``(t, eps)``.

    ``L_1`` runs down at slope ``-1/n`` then up at ``1/m`` from ``-eps'`` to
    ``-eps''``; ``g_2`` does the reverse and the remaining coordinates share
    what is left of the zero sum.  For ``m + n = 2`` this is ``L_2 = -L_1``.
    """
    adm = check_admissible(p1, p2, m, n)
    if not adm.admissible:
        raise InadmissiblePair(f"inadmissible pair {p1} -> {p2}: {'; '.join(adm.reasons)}",
                               admissibility=adm)
    t1, e1 = (to_fraction(x) for x in p1)
    t2, e2 = (to_fraction(x) for x in p2)
    dt, de = t2 - t1, e2 - e1
    h = Fraction(m * n, m + n)
    down1 = (dt / m + de) * h   # g_1 descends first for this long
    up2 = (dt / n - de) * h     # g_2 ascends first for this long
    up, down = Fraction(1, m), Fraction(-1, n)
    d = m + n

    def g1(t):
        return _two_slope(t, t1, e1, down, down1, up)

    def g2(t):
        return _two_slope(t, t1, e1, up, up2, down)

    nodes = sorted({t1, t1 + down1, t1 + up2, t2})

    if d == 2:
        vals = [(g1(t), -g1(t)) for t in nodes]
        return Template.from_values(m, n, nodes, vals).simplified()

    def g3(t):
        return -(g1(t) + g2(t)) / (d - 2)

    refined = [nodes[0]]
    for a, b in zip(nodes, nodes[1:]):
        da, db = g2(a) - g3(a), g2(b) - g3(b)
        if (da < 0 < db) or (db < 0 < da):
            refined.append(a + (b - a) * da / (da - db))
        refined.append(b)

    def point(t):
        x1, x2, x3 = g1(t), g2(t), g3(t)
        if x2 <= x3:
            return (x1, x2) + (x3,) * (d - 2)
        return (x1,) + (-x1 / (d - 1),) * (d - 1)

    return Template.from_values(m, n, refined, [point(t) for t in refined]).simplified()


def standard_template_seq(points, m, n, validate=True):
    """Concatenate the standard templates of consecutive point pairs.

    The result is checked with :func:`validate_template` unless
    ``validate=False``; junction defects raise :class:`InvalidTemplate`.
    """
    points = [(to_fraction(t), to_fraction(e)) for t, e in points]
    if len(points) < 2:
        raise ValueError("need at least two points")
    pieces = []
    for idx, (p, q) in enumerate(zip(points, points[1:])):
        try:
            pieces.append(standard_template(p, q, m, n))
        except InadmissiblePair as exc:
            raise InadmissiblePair(str(exc), index=idx, admissibility=exc.admissibility) from None
    out = Template.concatenate(pieces).simplified()
    if validate:
        report = validate_template(out)
        if report:
            raise InvalidTemplate(f"concatenation is not a template: {report[0]}", report)
    return out


def min_envelope(pairs, component=1, window=None):
    """Lower envelope of ``t -> L^i_component(a_i t)`` over the given pairs.

    ``pairs`` holds ``(template, weight)``; ``window`` is in the common time
    ``t`` and defaults to the intersection of the rescaled domains.
    """
    funcs = [tmpl.component(component).compose_scale(a) for tmpl, a in pairs]
    return lower_envelope(funcs, window)
