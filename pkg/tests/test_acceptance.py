"""Acceptance criteria 1-10, one PASS/FAIL line each (printed in the
terminal summary as ``CRITERION n: PASS|FAIL ...``)."""

import math
import random
import time
from fractions import Fraction as F

import numpy as np

from conftest import ACCEPTANCE_LINES
from pgnlab.constructions import (
    StepFunction,
    build_schedule,
    construction_I,
    construction_II,
    key_gap,
    lemma_key_solve,
    verify_construction_I,
    verify_construction_II,
)
from pgnlab.dimensions import SystemShape, dimension_report
from pgnlab.latflow import LatticeBasis, h_trajectory, successive_minima
from pgnlab.templates import (
    Template,
    average_contraction,
    standard_template,
    standard_template_seq,
    trivial_template,
    validate_template,
)

SHAPES = [(m, n) for m in range(1, 5) for n in range(1, 5) if m + n <= 5]
GOLD = (math.sqrt(5) - 1) / 2


def report(n, ok, detail, elapsed, limit):
    in_time = elapsed < limit
    verdict = "PASS" if ok and in_time else "FAIL"
    ACCEPTANCE_LINES.append(f"CRITERION {n}: {verdict}  {detail}  [{elapsed:.2f}s, limit {limit}s]")
    assert ok, detail
    assert in_time, f"took {elapsed:.2f}s, limit {limit}s"


def random_admissible(rng):
    """A random admissible pair via the sufficient spacing (m+n)^2 max(eps)."""
    m, n = rng.choice(SHAPES)
    e1 = F(rng.randint(0, 40), rng.randint(1, 8))
    e2 = F(rng.randint(0, 40), rng.randint(1, 8))
    t1 = F(rng.randint(-100, 100), rng.randint(1, 4))
    dt = (m + n) ** 2 * max(e1, e2) + F(rng.randint(1, 400), rng.randint(1, 4))
    return (t1, e1), (t1 + dt, e2), m, n


def test_criterion_1_trivial_rate():
    start = time.perf_counter()
    bad = [(m, n) for m, n in SHAPES if average_contraction(trivial_template(m, n, 100)) != m * n]
    report(1, not bad, f"Delta(trivial) == mn on {len(SHAPES)} shapes; mismatches {bad}",
           time.perf_counter() - start, 1)


def test_criterion_2_standard_block_rate():
    rng = random.Random(2)
    start = time.perf_counter()
    worst, failures, exact11, slowest = F(0), 0, True, 0.0
    for _ in range(200):
        m, n = rng.choice(SHAPES)
        eps = F(rng.randint(1, 50), rng.randint(1, 10))
        dt = eps * max(F(rng.randint(100, 2000), rng.randint(1, 2)), 100)
        t = time.perf_counter()
        val = average_contraction(standard_template((0, eps), (dt, eps), m, n))
        slowest = max(slowest, time.perf_counter() - t)
        err = abs(val - (m * n - F(m * n, m + n)))
        tol = 10 * eps / dt + F(1, 10 ** 9)
        worst = max(worst, err / tol)
        failures += err > tol
        if (m, n) == (1, 1):
            exact11 &= val == F(1, 2)
    ok = failures == 0 and exact11 and slowest < 1
    report(2, ok, f"200 symmetric blocks, worst err/tol {float(worst):.3f}, (1,1) exactly 1/2: {exact11}, "
                  f"slowest pair {slowest:.3f}s", time.perf_counter() - start, 200)


def test_criterion_3_l1_maximum():
    rng = random.Random(3)
    start = time.perf_counter()
    bad = 0
    for _ in range(200):
        p1, p2, m, n = random_admissible(rng)
        L = standard_template(p1, p2, m, n)
        bad += L.component(1).maximum()[0] != -min(p1[1], p2[1])
    report(3, bad == 0, f"max L_1 == -min(eps', eps'') on 200 random pairs; mismatches {bad}",
           time.perf_counter() - start, 60)


def test_criterion_4_construction_I_pair():
    start = time.perf_counter()
    shape = SystemShape([(1, 1), (1, 1)], [1, 1])
    S = build_schedule(shape, horizon=1.2e8)
    gaps, ok, parts = [], True, []
    for T in (1e7, 1e8):
        k = S.k_at(T)
        rep = verify_construction_I(construction_I(S, [k]), S, [k])
        g1 = rep.find(k, "1", "rate")["gap"]
        g2 = rep.find(k, "2", "rate")["gap"]
        env = rep.find(k, "all", "envelope")
        wit = all(v == 0 for kk, *_, v in rep.witnesses if kk == k)
        ok &= g1 <= 0.05 and g2 <= 0.05 and env["envelope_max"] <= env["bound"] and wit
        gaps.append((g1, g2))
        parts.append(f"T_k={S.T[k]:.3g}: gaps {g1:.2e}/{g2:.2e}, env {env['envelope_max']:.4f} <= {env['bound']:.4f}")
    ok &= gaps[1][0] <= gaps[0][0] and gaps[1][1] <= gaps[0][1]
    report(4, ok, "; ".join(parts), time.perf_counter() - start, 10)


def test_criterion_5_construction_I_mixed():
    start = time.perf_counter()
    shape = SystemShape([(1, 2), (2, 1)], [1, 1.5])
    S = build_schedule(shape, horizon=1e12)
    gaps = []
    for T in (1e10, 1e12 / 1.0001):
        k = S.k_at(T)
        rep = verify_construction_I(construction_I(S, [k]), S, [k])
        row = rep.find(k, "1", "rate")
        gaps.append(abs(row["delta_window"] - (2 - F(2, 3))))
    ok = gaps[0] <= 0.25 and gaps[1] < gaps[0]
    report(5, ok, f"gap at 1e10 {gaps[0]:.4f} (<= 0.25), at 1e12 {gaps[1]:.4f} (smaller)",
           time.perf_counter() - start, 60)


def test_criterion_6_construction_II():
    start = time.perf_counter()
    shape = SystemShape([(1, 1), (1, 1)])
    S = build_schedule(shape, horizon=1.1e7, mode="II", deltas=[F(1, 4), F(1, 4)])
    k = S.k_at(1e7)
    rep = verify_construction_II(construction_II(S, [k]), S, [k], 1)
    occ = rep.find(k, "all", "band")["occupation"]
    ex = [rep.find(k, f"not {j}", "band")["occupation"] for j in (1, 2)]
    rates = [rep.find(k, str(j), "rate")["delta_window"] for j in (1, 2)]
    ok = abs(occ - 0.5) <= 0.05 and all(abs(x - 0.75) <= 0.05 for x in ex) \
        and all(abs(r - 0.875) <= 0.05 for r in rates)
    report(6, ok, f"all {occ:.4f}, excl {ex[0]:.4f}/{ex[1]:.4f}, rates {rates[0]:.4f}/{rates[1]:.4f}",
           time.perf_counter() - start, 10)


def _random_key_instance(rng):
    s = rng.randint(1, 4)
    sig = [F(1)]
    for _ in range(s - 1):
        sig.append(sig[-1] * F(rng.randint(1, 4), rng.randint(4, 6)))
    fs = []
    for _ in range(s):
        breaks = sorted({F(rng.randint(1, 400), rng.randint(1, 4)) for _ in range(rng.randint(0, 5))})
        vals = [F(rng.randint(0, 6), rng.randint(1, 3)) for _ in range(len(breaks) + 1)]
        fs.append(StepFunction(tuple(breaks), tuple(vals)).bounded())
    return fs, sig, F(rng.randint(1, 10), 10), F(rng.randint(1, 50), rng.randint(1, 3))


def _grid_oracle(fs, sig, eps, t0):
    """First qualifying t >= t0 among all points where the gap can change."""
    pts = {t0}
    for f in fs:
        for b in f.func.breaks:
            pts.update(b / s for s in sig)
    for t in sorted(p for p in pts if p >= t0):
        if key_gap(fs, sig, eps, t) >= 0:
            return t
    return None


def test_criterion_7_key_solver():
    rng = random.Random(7)
    start = time.perf_counter()
    bad = 0
    for _ in range(100):
        fs, sig, eps, t0 = _random_key_instance(rng)
        t = lemma_key_solve(fs, sig, eps, t0)
        oracle = _grid_oracle(fs, sig, eps, t0)
        bad += not (t >= t0 and key_gap(fs, sig, eps, t) >= 0 and oracle is not None and oracle <= t)
    report(7, bad == 0, f"100 random instances, failures {bad}", time.perf_counter() - start, 5)


def test_criterion_8_lattice():
    start = time.perf_counter()
    grid = np.arange(2, 8.0001, 0.1)
    tr = h_trajectory(F(2, 7), 1, 1, grid, first_only=True)
    err27 = float(np.max(np.abs(tr.h1 - (math.log(7) - grid))))
    gold = h_trajectory(GOLD, 1, 1, np.linspace(0, 15, 301), first_only=True).h1.min()
    rng = np.random.default_rng(8)
    mink_bad = 0
    for i in range(500):
        d = 2 + i % 3
        B = rng.normal(size=(d, d))
        B /= abs(np.linalg.det(B)) ** (1 / d)
        prod = float(np.prod(successive_minima(LatticeBasis(B))))
        mink_bad += not (1 / math.factorial(d) - 1e-9 <= prod <= 1 + 1e-9)
    ok = err27 <= 1e-9 and gold >= -0.6 and mink_bad == 0
    report(8, ok, f"2/7 max err {err27:.1e}; golden min h1 {gold:.4f}; Minkowski violations {mink_bad}/500",
           time.perf_counter() - start, 30)


def test_criterion_9_dimensions():
    start = time.perf_counter()
    d = dimension_report(SystemShape([(1, 1), (1, 1)])).dim_D
    sing = dimension_report(SystemShape([(2, 1)])).sing[0]
    rng = random.Random(9)
    bad = 0
    for _ in range(100):
        s = rng.randint(2, 4)
        sh = SystemShape([(rng.randint(1, 4), rng.randint(1, 4)) for _ in range(s)],
                         [F(rng.randint(1, 9), rng.randint(1, 3)) for _ in range(s)])
        delta = F(rng.randint(1, 20), 20)
        r = dimension_report(sh, delta)
        vals = (r.dim_D, r.dim_D_delta, r.dim_hom, r.dim_hom_delta, r.min_b)
        bad += not (all(isinstance(v, F) for v in vals)
                    and r.dim_D_delta - r.dim_D == (1 - delta) * r.min_b)
    ok = d == F(3, 2) and sing == F(4, 3) and bad == 0
    report(9, ok, f"dim D (1,1)^2 = {d}; Sing(2,1) = {sing}; delta-linearity failures {bad}/100",
           time.perf_counter() - start, 1)


def _generated_templates(rng):
    out = []
    while len(out) < 90:
        kind = rng.randrange(4)
        m, n = rng.choice(SHAPES)
        if kind == 0:
            out.append(trivial_template(m, n, F(rng.randint(1, 100), rng.randint(1, 3))))
        elif kind == 1:
            out.append(standard_template(*random_admissible(rng)))
        elif kind == 2 and m + n > 2:
            h = F(rng.randint(0, 6), rng.randint(1, 2))
            dt = (m + n) ** 2 * max(h, 1) + rng.randint(1, 20)
            pts = [(0, h), (dt, h), (2 * dt, 0), (3 * dt, h)]
            out.append(standard_template_seq(pts, m, n))
        elif kind == 3:
            a = trivial_template(m, n, 10)
            b = trivial_template(m, n, 5, start=10)
            out.append(Template.concatenate([a, b]))
    S = build_schedule(SystemShape([(1, 1), (1, 1)]), horizon=2e6)
    for k in (S.kmax - 2, S.kmax - 1):
        out.extend(construction_I(S, [k]))
    S = build_schedule(SystemShape([(1, 1), (1, 1)]), horizon=2e6, mode="II", deltas=[F(1, 4), F(1, 4)])
    for k in (S.kmax - 2, S.kmax - 1):
        out.extend(construction_II(S, [k]))
    # the mixed shape first becomes valid near T = 8.6e8; its first windows suffice
    S = build_schedule(SystemShape([(1, 2), (2, 1)]), horizon=1e9)
    out.extend(construction_I(S, [S.k0]))
    out.extend(construction_I(S, [S.k0, S.k0 + 1]))
    S = build_schedule(SystemShape([(1, 2), (2, 1)]), horizon=1e9, mode="II", deltas=[F(1, 3), F(1, 3)])
    out.extend(construction_II(S, [S.k0]))
    return out


def test_criterion_10_validation_roundtrip():
    start = time.perf_counter()
    temps = _generated_templates(random.Random(10))
    invalid = sum(bool(validate_template(L)) for L in temps)
    lossy = sum(Template.from_json(L.to_json()) != L for L in temps)
    ok = len(temps) >= 100 and invalid == 0 and lossy == 0
    report(10, ok, f"{len(temps)} templates: invalid {invalid}, lossy round-trips {lossy}",
           time.perf_counter() - start, 5)
