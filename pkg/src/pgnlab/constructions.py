"""The two template constructions, their window-by-window verification and
the constructive search behind the key inequality ``sum f_i(t) <= eps + sum f_i(sigma_i t)``.

Schedules are computed in floating point; every template built from them is
exact (the float times and ``log gamma_k`` are converted to Fractions
without rounding), so window averages, envelope maxima and witness values
are exact statements about those templates.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import csv
import io
import json
import math
from bisect import bisect_right

import numpy as np

from ._exact import to_fraction
from .dimensions import SystemShape
from .templates import (
    InvalidTemplate,
    Template,
    TemplateError,
    average_contraction,
    min_envelope,
    standard_template,
    standard_template_seq,
    trivial_template,
    validate_template,
)

T_CAP = 1e12


class NoValidK0(ValueError):
    """No starting index satisfies the schedule inequalities up to ``kmax``."""


class BandTooWide(ValueError):
    """The band half-width is not below ``log gamma_k``."""


class SupViolated(ValueError):
    """A function exceeded its declared supremum (or went negative)."""


# --- schedule ---------------------------------------------------------------

def _cbrt_floor(T):
    l = np.floor(np.cbrt(T)).astype(np.int64)
    l += ((l + 1).astype(float) ** 3 <= T)
    l -= (l.astype(float) ** 3 > T)
    return l


@dataclass(frozen=True)
class Schedule:
    shape: SystemShape
    mode: str
    T: np.ndarray          # T_0 .. T_{kmax+1}
    l: np.ndarray          # l_0 .. l_{kmax+1}
    gamma: np.ndarray      # gamma_0 .. gamma_{kmax+1}
    k0: int
    deltas: tuple = None
    q: np.ndarray = None   # q[k, j] for j = 0..s (mode II)

    @property
    def kmax(self):
        return len(self.l) - 2

    def t(self, k, l):
        """Grid time ``t_{k,l} = T_k + l gamma_k`` with ``t_{k,l_k} = T_{k+1}``."""
        if not 0 <= l <= self.l[k]:
            raise IndexError(f"l={l} outside [0, {self.l[k]}] at k={k}")
        if l == self.l[k]:
            return float(self.T[k + 1])
        return float(self.T[k] + l * self.gamma[k])

    def log_gamma(self, k):
        return math.log(self.gamma[k])

    def k_at(self, value):
        """Last ``k`` with ``T_k <= value``."""
        k = int(np.searchsorted(self.T[:-1], value, side="right")) - 1
        if k < 0 or (k == self.kmax and value >= self.T[k + 1]):
            raise NoValidK0(f"T = {value:g} lies beyond the schedule horizon")
        return k


def build_schedule(shape, kmax=None, mode="I", deltas=None, horizon=None):
    """Schedule ``T_{k+1} = T_k + sqrt(T_k)`` with ``k0`` found by scanning.

    Give ``kmax`` directly or a ``horizon`` (kmax becomes the last ``k``
    with ``T_k <= horizon``).  ``k0`` is the least ``k`` such that the
    validity inequalities (and, for mode II, the gap inequalities) hold for
    every ``k'`` in ``[k, kmax]``.
    """
    mode = str(mode).upper()
    if mode not in ("I", "II"):
        raise ValueError("mode must be I or II")
    if (kmax is None) == (horizon is None):
        raise ValueError("give exactly one of kmax, horizon")
    s = shape.s
    if mode == "II":
        if deltas is None or len(deltas) != s:
            raise ValueError("mode II needs one delta per factor")
        fr = [to_fraction(x) for x in deltas]
        total = sum(fr)
        if not 0 < total <= 1 or any(x <= 0 for x in fr):
            raise ValueError("need delta_i > 0 with delta = sum delta_i <= 1")
        deltas = tuple(fr)

    Ts = [1.0]
    if horizon is not None:
        if horizon > T_CAP:
            raise ValueError(f"horizon above {T_CAP:g}")
        while Ts[-1] + math.sqrt(Ts[-1]) <= horizon:
            Ts.append(Ts[-1] + math.sqrt(Ts[-1]))
        kmax = len(Ts) - 1
    else:
        for _ in range(kmax):
            Ts.append(Ts[-1] + math.sqrt(Ts[-1]))
    Ts.append(Ts[-1] + math.sqrt(Ts[-1]))
    T = np.array(Ts)
    if T[kmax] > T_CAP:
        raise ValueError(f"T_kmax exceeds {T_CAP:g}")
    # one extra entry: window kmax ends at height log gamma_{kmax+1}
    l_all = _cbrt_floor(T)
    gamma_all = np.sqrt(T) / l_all
    l, gamma = l_all[:kmax + 1], gamma_all[:kmax + 1]
    root = np.sqrt(T[:kmax + 1])
    logg = np.log(gamma)

    ok = np.ones(kmax + 1, dtype=bool)
    for a, (m, n) in zip(shape.weights, shape.pairs):
        ok &= float(a) * gamma >= (m + n) ** 2 * logg
    q = None
    if mode == "I":
        ok &= l >= 8 * s
    else:
        cum = np.cumsum([float(x) for x in deltas])
        q = np.zeros((kmax + 1, s + 1), dtype=np.int64)
        for j, D in enumerate(cum, start=1):
            bound = D * root
            qj = np.minimum(np.floor(bound / gamma).astype(np.int64), l)
            qj += ((qj + 1) * gamma <= bound) & (qj + 1 <= l)
            qj -= (qj * gamma > bound)
            q[:, j] = qj
        ok &= (l - q[:, s]) >= 4
        ok &= (np.diff(q, axis=1) >= 4).all(axis=1)
    # suffix "all valid" scan
    bad = np.nonzero(~ok)[0]
    k0 = int(bad[-1]) + 1 if len(bad) else 0
    if k0 > kmax:
        raise NoValidK0(f"no k0 <= kmax={kmax} (T_kmax = {T[kmax]:.4g})")
    return Schedule(shape, mode, T, l_all, gamma_all, k0, deltas, q)


# --- template tuples ----------------------------------------------------------

@dataclass(frozen=True)
class TemplateTuple:
    shape: SystemShape
    templates: tuple
    k_first: int
    k_last: int
    construction: str

    def __iter__(self):
        return iter(self.templates)

    def __getitem__(self, i):
        return self.templates[i]

    def to_json_dicts(self):
        return [t.to_json_dict() for t in self.templates]


def _F(x):
    return Fraction(x)


def _pieces_I(sched, i, k):
    """Pieces of factor ``i`` (0-based) on window ``k``, in factor time."""
    a = sched.shape.weights[i]
    s = sched.shape.s
    t = lambda l: a * _F(sched.t(k, l))
    lg = _F(sched.log_gamma(k))
    Tk, Tk1 = a * _F(sched.T[k]), a * _F(sched.T[k + 1])
    if k < sched.k0:
        return [("triv", Tk, Tk1)]
    if k == sched.k0:
        if i == 0:
            return [("seq", [(Tk, Fraction(0)), (Tk1, _F(sched.log_gamma(k + 1)))])]
        return [("triv", Tk, Tk1)]
    if i == 0:
        out = []
        for b in range(s - 1):
            out.append(("seq", [(t(4 * b), lg), (t(4 * b + 1), lg), (t(4 * b + 2), Fraction(0)),
                                (t(4 * b + 3), lg), (t(4 * b + 4), lg)]))
        L = int(sched.l[k])
        pts = [(t(x), lg) for x in range(4 * s - 4, L)]
        pts.append((Tk1, _F(sched.log_gamma(k + 1))))
        out.append(("seq", pts))
        return out
    j = i + 1  # 1-based factor index
    out = []
    if j > 2:
        out.append(("triv", Tk, t(4 * j - 8)))
    out.append(("seq", [(t(4 * j - 8), Fraction(0)), (t(4 * j - 7), lg), (t(4 * j - 6), lg),
                        (t(4 * j - 5), lg), (t(4 * j - 4), Fraction(0))]))
    out.append(("triv", t(4 * j - 4), Tk1))
    return out


def _pieces_II(sched, i, k):
    a = sched.shape.weights[i]
    t = lambda l: a * _F(sched.t(k, l))
    Tk, Tk1 = a * _F(sched.T[k]), a * _F(sched.T[k + 1])
    if k < sched.k0:
        return [("triv", Tk, Tk1)]
    lg = _F(sched.log_gamma(k))
    lo, hi = int(sched.q[k, i]), int(sched.q[k, i + 1])
    out = []
    if lo > 0:
        out.append(("triv", Tk, t(lo)))
    pts = [(t(lo), Fraction(0))] + [(t(x), lg) for x in range(lo + 1, hi)] + [(t(hi), Fraction(0))]
    out.append(("seq", pts))
    if hi < sched.l[k]:
        out.append(("triv", t(hi), Tk1))
    return out


def _realize(pieces, m, n):
    """Template from pieces, following the point sequences literally."""
    parts = []
    for kind, *rest in pieces:
        if kind == "triv":
            a, b = rest
            parts.append(trivial_template(m, n, b - a, a))
        else:
            parts.append(standard_template_seq(rest[0], m, n, validate=False))
    return Template.concatenate(parts).simplified()


def _realize_tents(pieces):
    """1x1 realization: keep the zero anchors and trivial stretches, and join
    consecutive zero anchors across non-trivial stretches by a single V."""
    anchors = []  # (time, flat_before)
    for kind, *rest in pieces:
        if kind == "triv":
            a, b = rest
            if not anchors or anchors[-1][0] != a:
                anchors.append((a, False))
            anchors.append((b, True))
        else:
            for tt, e in rest[0]:
                if e == 0 and (not anchors or anchors[-1][0] != tt):
                    anchors.append((tt, False))
    if len(anchors) < 2:
        raise TemplateError("no zero anchors to hang 1x1 tents on")
    parts = []
    for (a, _), (b, flat) in zip(anchors, anchors[1:]):
        if flat:
            parts.append(trivial_template(1, 1, b - a, a))
        else:
            parts.append(standard_template((a, 0), (b, 0), 1, 1))
    return Template.concatenate(parts).simplified()


def _build(sched, ks, piece_fn, name):
    ks = list(ks)
    if not ks:
        raise ValueError("empty k range")
    k_first, k_last = min(ks), max(ks)
    if k_last > sched.kmax:
        raise ValueError(f"k={k_last} beyond kmax={sched.kmax}")
    out = []
    for i, ((m, n), a) in enumerate(zip(sched.shape.pairs, sched.shape.weights)):
        lo_t = a * _F(sched.T[k_first])
        hi_t = a * _F(sched.T[k_last + 1])
        if (m, n) == (1, 1):
            # extend by a window each side so the boundary tents are complete
            lo_k = max(0, k_first - 1)
            hi_k = min(sched.kmax, k_last + 1)
            pieces = [p for k in range(lo_k, hi_k + 1) for p in piece_fn(sched, i, k)]
            if lo_k == 0:
                pieces.insert(0, ("triv", Fraction(0), a * _F(sched.T[0])))
            full = _realize_tents(pieces)
            lo, hi = full.domain
            if lo > lo_t or hi < hi_t:
                raise TemplateError(f"factor {i + 1}: 1x1 tents do not cover the requested windows "
                                    "(extend the schedule by one window)")
            L = full.restrict(lo_t, hi_t).simplified()
        else:
            pieces = [p for k in range(k_first, k_last + 1) for p in piece_fn(sched, i, k)]
            L = _realize(pieces, m, n)
        report = validate_template(L)
        if report:
            raise InvalidTemplate(f"{name}: factor {i + 1} fails validation: {report[0]}", report)
        out.append(L)
    return TemplateTuple(sched.shape, tuple(out), k_first, k_last, name)


def construction_I(schedule, ks):
    """First construction on windows ``ks`` (factor 1 carries the dips).

    1x1 factors are realized by tents between the zero anchors; a window
    range whose ends sit at positive height then needs one schedule window
    on each side.
    """
    if schedule.mode != "I":
        raise ValueError("schedule was built for mode II")
    if any((m, n) == (1, 1) for m, n in schedule.shape.pairs) and schedule.shape.s == 1:
        raise TemplateError("a single 1x1 factor has no zero anchors in this construction")
    return _build(schedule, ks, _pieces_I, "I")


def construction_II(schedule, ks):
    """Second construction: factor ``i`` makes one excursion per window, on
    ``[t_{k,q^{i-1}}, t_{k,q^i}]``."""
    if schedule.mode != "II":
        raise ValueError("schedule was built for mode I")
    return _build(schedule, ks, _pieces_II, "II")


# --- verification -------------------------------------------------------------

COLUMNS = ("k", "T_k", "gamma_k", "factor", "quantity", "delta_window", "occupation",
           "target", "gap", "envelope_max", "bound")


@dataclass
class VerificationReport:
    construction: str
    rows: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)   # (k, j, t, exact value)

    def find(self, k, factor, quantity):
        for r in self.rows:
            if r["k"] == k and r["factor"] == factor and r["quantity"] == quantity:
                return r
        raise KeyError((k, factor, quantity))

    def to_json(self):
        obj = {
            "construction": self.construction,
            "rows": [{c: r.get(c) for c in COLUMNS} for r in self.rows],
            "witnesses": [{"k": k, "j": j, "t": t, "value": str(v)} for k, j, t, v in self.witnesses],
        }
        return json.dumps(obj, indent=1, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r.get(c)) for c in COLUMNS])
        return buf.getvalue()


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _row(sched, k, factor, quantity, **kw):
    r = {"k": k, "T_k": float(sched.T[k]), "gamma_k": float(sched.gamma[k]),
         "factor": factor, "quantity": quantity}
    r.update(kw)
    if r.get("target") is not None:
        val = r.get("delta_window") if quantity == "rate" else r.get("occupation")
        r["gap"] = abs(val - r["target"])
    return r


def _window_rate(L, a, sched, k):
    return average_contraction(L, (a * _F(sched.T[k]), a * _F(sched.T[k + 1])))


def _envelope(tt, idx, sched, k):
    pairs = [(tt[i], tt.shape.weights[i]) for i in idx]
    return min_envelope(pairs, 1, (_F(sched.T[k]), _F(sched.T[k + 1])))


def _check_ks(tt, ks):
    for k in ks:
        if not tt.k_first <= k <= tt.k_last:
            raise ValueError(f"k={k} outside the generated range [{tt.k_first}, {tt.k_last}]")


def verify_construction_I(tt, schedule, ks):
    """Window averages, envelope maximum and witness values per window."""
    _check_ks(tt, ks)
    shape = tt.shape
    rep = VerificationReport("I")
    for k in ks:
        for i, ((m, n), a) in enumerate(zip(shape.pairs, shape.weights)):
            val = _window_rate(tt[i], a, schedule, k)
            target = Fraction(m * n) - (shape.b[i] if i == 0 else 0)
            rep.rows.append(_row(schedule, k, str(i + 1), "rate",
                                 delta_window=float(val), target=float(target)))
        env_max, _ = _envelope(tt, range(shape.s), schedule, k).maximum()
        rep.rows.append(_row(schedule, k, "all", "envelope", envelope_max=float(env_max),
                             bound=-schedule.log_gamma(k)))
        s = shape.s
        if s >= 2 and k > schedule.k0:
            checks = [(1, 4 * s)] + [(j, 4 * j - 6) for j in range(2, s + 1)]
            for j, l in checks:
                t = _F(schedule.t(k, l))
                v = min(tt[i].component(1)(shape.weights[i] * t) for i in range(s) if i != j - 1)
                rep.witnesses.append((k, j, float(t), v))
    return rep


def verify_construction_II(tt, schedule, ks, C):
    """Window averages and exact band occupations of the lower envelopes."""
    _check_ks(tt, ks)
    shape = tt.shape
    C = to_fraction(C)
    if C <= 0:
        raise ValueError("band half-width must be positive")
    deltas = schedule.deltas
    total = sum(deltas)
    rep = VerificationReport("II")
    for k in ks:
        lg = schedule.log_gamma(k)
        if C >= lg:
            raise BandTooWide(f"C={float(C)} >= log gamma_k = {lg:.4g} at k={k}")
        root = _F(math.sqrt(schedule.T[k]))
        for i, ((m, n), a) in enumerate(zip(shape.pairs, shape.weights)):
            val = _window_rate(tt[i], a, schedule, k)
            target = m * n - deltas[i] * shape.b[i]
            rep.rows.append(_row(schedule, k, str(i + 1), "rate",
                                 delta_window=float(val), target=float(target)))
        env = _envelope(tt, range(shape.s), schedule, k)
        occ = env.measure_where(-C, C) / root
        rep.rows.append(_row(schedule, k, "all", "band", occupation=float(occ),
                             target=float(1 - total), envelope_max=float(env.maximum()[0])))
        if shape.s >= 2:
            for j in range(shape.s):
                env = _envelope(tt, [i for i in range(shape.s) if i != j], schedule, k)
                occ = env.measure_where(-C, C) / root
                rep.rows.append(_row(schedule, k, f"not {j + 1}", "band", occupation=float(occ),
                                     target=float(1 - (total - deltas[j]))))
    return rep


# --- the key inequality -------------------------------------------------------

@dataclass(frozen=True)
class BoundedFunction:
    """A nonnegative function with a declared supremum.

    ``tail`` is an optional ``(x0, value)``: the function equals ``value``
    on ``[x0, inf)``.  It lets folded sums stop early.
    """

    func: object
    sup: Fraction
    tail: tuple = None

    def __call__(self, t):
        v = self.func(t)
        if v < 0 or v > self.sup:
            raise SupViolated(f"value {v} at t={t} outside [0, {self.sup}]")
        return v


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant function: ``values[k]`` on
    ``[breaks[k-1], breaks[k])``, with ``values[0]`` before ``breaks[0]``."""

    breaks: tuple
    values: tuple

    def __post_init__(self):
        b = tuple(to_fraction(x) for x in self.breaks)
        v = tuple(to_fraction(x) for x in self.values)
        if len(v) != len(b) + 1:
            raise ValueError("need one more value than breaks")
        if any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("breaks must increase")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        return self.values[bisect_right(self.breaks, to_fraction(t))]

    @property
    def sup(self):
        return max(self.values)

    def bounded(self):
        x0 = self.breaks[-1] if self.breaks else Fraction(0)
        return BoundedFunction(self, self.sup, (x0, self.values[-1]))


def _plugin(f, sigma_s, Q):
    """``t -> sum_{q=0}^{Q} f(sigma_s^{-q} t)``."""
    inv = 1 / sigma_s
    tail = f.tail

    def g(t):
        if sigma_s == 1:
            return (Q + 1) * f(t)
        total, x = Fraction(0), t
        for q in range(Q + 1):
            if tail is not None and x >= tail[0]:
                # every remaining dilate lies in the constant tail
                return total + (Q + 1 - q) * tail[1]
            total += f(x)
            x *= inv
        return total

    new_tail = None if tail is None else (tail[0], (Q + 1) * tail[1])
    return BoundedFunction(g, (Q + 1) * f.sup, new_tail)


def key_gap(fs, sigmas, eps, t):
    """``eps + sum f_i(sigma_i t) - sum f_i(t)``; nonnegative means ``t`` qualifies."""
    return eps + sum(f(s * t) for f, s in zip(fs, sigmas)) - sum(f(t) for f in fs)


def lemma_key_solve(fs, sigmas, eps, t0):
    """Find ``t >= t0`` with ``sum f_i(t) <= eps + sum f_i(sigma_i t)``.

    Follows the inductive proof: fold the last function's dilates into the
    others, solve the smaller problem, then scan the ``Q + 1`` dilates of
    that solution.  ``fs`` are :class:`BoundedFunction` (or anything with a
    ``sup`` attribute); arithmetic is exact when they return Fractions.
    """
    fs = [f if isinstance(f, BoundedFunction) else BoundedFunction(f, to_fraction(f.sup)) for f in fs]
    sigmas = [to_fraction(s) for s in sigmas]
    eps, t0 = to_fraction(eps), to_fraction(t0)
    if len(fs) != len(sigmas) or not fs:
        raise ValueError("one sigma per function")
    if sigmas[0] != 1 or any(b > a for a, b in zip(sigmas, sigmas[1:])) or sigmas[-1] <= 0:
        raise ValueError("need 1 = sigma_1 >= sigma_2 >= ... > 0")
    if eps <= 0 or t0 <= 0:
        raise ValueError("eps and t0 must be positive")
    return _solve(fs, sigmas, eps, t0)


def _solve(fs, sigmas, eps, t0):
    s = len(fs)
    if s == 1:
        return t0
    fs_last, sig = fs[-1], sigmas[-1]
    Q = max(0, math.ceil(fs_last.sup / eps))
    gs = [_plugin(f, sig, Q) for f in fs[:-1]]
    t1 = _solve(gs, sigmas[:-1], eps, t0)
    for q in range(Q + 1):
        t = t1 / sig ** q
        if key_gap(fs, sigmas, eps, t) >= 0:
            return t
    raise SupViolated("no dilate qualified; a declared sup must be wrong")
