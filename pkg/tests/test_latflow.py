import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest

from pgnlab.dimensions import SystemShape
from pgnlab.latflow import (
    BudgetExceeded,
    LatticeBasis,
    MatrixTuple,
    MinimaTrajectory,
    cusp_occupation,
    embed_theta,
    first_minimum,
    flow_lattice,
    flow_matrix,
    h_trajectory,
    occupation_joint,
    scan_Q,
    successive_minima,
    witness_profile,
)

GOLD = (math.sqrt(5) - 1) / 2


def brute_minima(B, K):
    """Successive minima by enumerating all coefficients in [-K, K]^d."""
    d = B.shape[0]
    vecs = []
    for z in itertools.product(range(-K, K + 1), repeat=d):
        if any(z):
            vecs.append((np.abs(B @ np.array(z)).max(), z))
    vecs.sort()
    picked = []
    for norm, z in vecs:
        if np.linalg.matrix_rank(np.array(picked + [z], dtype=float)) > len(picked):
            picked.append(z)
            if len(picked) == d:
                break
    return [np.abs(B @ np.array(z)).max() for z in picked]


def fib_oracle_h1(t):
    """log lambda_1 for the float GOLD via its Fibonacci convergents, with
    the residuals |q GOLD - p| computed exactly."""
    exact = F(GOLD)
    a, b = 0, 1
    best = math.exp(t)  # the vector from (p, q) = (1, 0)
    for _ in range(40):
        p, q = a, b  # p/q = F_{k-1}/F_k converges to GOLD
        best = min(best, max(math.exp(t) * float(abs(q * exact - p)), math.exp(-t) * q))
        a, b = b, a + b
    return math.log(best)


# --- matrices -------------------------------------------------------------------

def test_flow_matrix_examples():
    assert np.allclose(flow_matrix(1, 1, 0), np.eye(2))
    assert np.allclose(flow_matrix(2, 1, 2 * math.log(2)), np.diag([2, 2, 0.25]))
    assert np.allclose(flow_matrix(1, 2, math.log(8)), np.diag([8, 8 ** -0.5, 8 ** -0.5]))


def test_embed_theta_examples():
    assert np.allclose(embed_theta([[0]]).columns, np.eye(2))
    assert np.allclose(embed_theta(F(1, 3)).columns, [[1, 1 / 3], [0, 1]])
    assert np.allclose(embed_theta([[0.2, 0.7]]).columns, [[1, 0.2, 0.7], [0, 1, 0], [0, 0, 1]])


def test_unimodular_random():
    rng = np.random.default_rng(1)
    for _ in range(20):
        m, n = rng.integers(1, 4, size=2)
        theta = rng.normal(size=(m, n))
        t = rng.uniform(0, 5)
        B = flow_matrix(m, n, t) @ embed_theta(theta).columns
        assert abs(np.linalg.det(B) - 1) < 1e-9
        assert np.allclose(flow_lattice(theta, t).columns, B)


# --- successive minima ------------------------------------------------------------

def test_minima_examples():
    assert np.allclose(successive_minima(np.eye(2)), [1, 1])
    assert np.allclose(successive_minima(np.diag([0.5, 2])), [0.5, 2])
    lam, Z = successive_minima(np.array([[3, 1], [0, 1 / 3]]), return_vectors=True)
    assert np.allclose(lam, [1, 1])


def test_minima_against_brute_force():
    rng = np.random.default_rng(5)
    for d in (2, 3):
        for _ in range(15):
            B = rng.normal(size=(d, d))
            B /= abs(np.linalg.det(B)) ** (1 / d)
            lam = successive_minima(LatticeBasis(B))
            ref = brute_minima(B, 6 if d == 2 else 4)
            # brute force only searches a box; it can miss but never beat
            assert np.all(lam <= np.array(ref) + 1e-12)
            assert np.allclose(lam[0], ref[0])


def test_minima_vectors_attain_values():
    B = flow_lattice([[0.3, 0.77]], 2.0).columns
    lam, Z = successive_minima(LatticeBasis(B), return_vectors=True)
    assert np.allclose(np.abs(Z @ B.T).max(axis=1), lam)
    assert abs(round(np.linalg.det(Z.astype(float)))) >= 1


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        successive_minima(flow_lattice(GOLD, 12.0), budget=100)


def test_first_minimum_matches():
    basis = flow_lattice(F(3, 11), 4.0)
    assert math.isclose(first_minimum(basis), successive_minima(basis)[0])


# --- trajectories ------------------------------------------------------------------

def test_trajectory_theta_zero():
    tr = h_trajectory(0, 1, 1, [1.0])
    assert np.allclose(tr.rows[0], [-1, 1])


def test_trajectory_two_sevenths():
    tr = h_trajectory(F(2, 7), 1, 1, np.arange(2, 8.01, 0.25))
    assert np.allclose(tr.h1, math.log(7) - tr.grid, atol=1e-9)


def test_trajectory_invariants():
    rng = np.random.default_rng(3)
    for m, n in [(1, 1), (1, 2), (2, 1)]:
        theta = rng.uniform(size=(m, n))
        tr = h_trajectory(theta, m, n, np.linspace(0, 4, 9))
        d = m + n
        assert np.all(np.diff(tr.rows, axis=1) >= -1e-12)
        assert np.all(tr.h1 <= 1e-12)
        sums = tr.rows.sum(axis=1)
        assert np.all(sums <= 1e-9) and np.all(sums >= -math.log(math.factorial(d)) - 1e-9)


def test_trajectory_golden_against_convergents():
    grid = np.linspace(0, 15, 61)
    tr = h_trajectory(GOLD, 1, 1, grid, first_only=True)
    ref = np.array([fib_oracle_h1(t) for t in grid])
    assert np.allclose(tr.h1, ref, atol=1e-9)
    assert tr.h1.min() >= -0.6


def test_rational_sublattice_law():
    for p, q in [(1, 3), (3, 5), (5, 12)]:
        grid = np.linspace(math.log(q) + 0.5, math.log(q) + 4, 8)
        tr = h_trajectory(F(p, q), 1, 1, grid, first_only=True)
        assert np.allclose(tr.h1, math.log(q) - grid, atol=1e-9)


def test_trajectory_csv_roundtrip():
    tr = h_trajectory(F(2, 7), 1, 1, [0.0, 1.0, 2.0])
    text = tr.to_csv()
    assert text.splitlines()[0] == "t,h_1,h_2"
    back = MinimaTrajectory.from_csv(text)
    assert np.allclose(back.rows, tr.rows, atol=1e-11)


def test_trajectory_grid_must_increase():
    with pytest.raises(ValueError):
        h_trajectory(0, 1, 1, [1.0, 0.5])


# --- witnesses ---------------------------------------------------------------------

def test_scan_examples():
    w = scan_Q(0, 0.5, 10)
    assert w.q == (1,) and w.p == (0,)
    w = scan_Q(F(1, 2), 0.6, 2)
    assert w.q == (2,) and w.p == (1,) and w.error == 0
    assert scan_Q(GOLD + 1, 0.1, 10) is None


def test_scan_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(30):
        theta = rng.uniform()
        eps, Q = rng.uniform(0.05, 1), rng.uniform(1, 60)
        brute = any(abs(theta * q - round(theta * q)) < eps / Q for q in range(1, int(Q) + 1))
        assert (scan_Q(theta, eps, Q) is not None) == brute


def test_scan_monotone_in_eps():
    rng = np.random.default_rng(4)
    for _ in range(30):
        theta = rng.uniform(size=(2, 1))
        Q = rng.uniform(1, 200)
        eps = rng.uniform(0.01, 1)
        if scan_Q(theta, eps, Q) is not None:
            assert scan_Q(theta, eps * 1.5, Q) is not None


def test_scan_budget():
    with pytest.raises(BudgetExceeded):
        scan_Q([[0.1, 0.2, 0.3]], 0.5, 1e12, budget=1000)


def test_profile_agrees_with_scan():
    theta = [[0.41, 0.13]]
    prof = witness_profile(theta, 400)
    for Q in (3.0, 17.0, 90.0, 399.0):
        for eps in (0.1, 0.5):
            assert bool(prof.contains(Q, eps)) == (scan_Q(theta, eps, Q) is not None)


# --- occupations ----------------------------------------------------------------------

def test_occupation_rational():
    shape = SystemShape([(1, 1), (1, 1)])
    T = 10.0
    val = occupation_joint([F(2, 7), F(1, 3)], shape, 0.1, T)
    # exact witnesses from Q >= 3 on, i.e. t >= ln 3
    assert val >= 1 - math.log(3) / T - 0.01


def test_occupation_refinement():
    shape = SystemShape([(1, 1), (1, 1)])
    for eps in (0.1, 1.0):
        a = occupation_joint([GOLD + 1, GOLD + 1], shape, eps, 5, 0.01)
        b = occupation_joint([GOLD + 1, GOLD + 1], shape, eps, 5, 0.001)
        assert abs(a - b) <= 0.02


def test_occupation_exclude_monotone():
    shape = SystemShape([(1, 1), (1, 2)], [1, 2])
    thetas = MatrixTuple([[[0.3819]], [[0.21, 0.77]]])
    full = occupation_joint(thetas, shape, 1.0, 4)
    for j in (0, 1):
        assert occupation_joint(thetas, shape, 1.0, 4, exclude=j) <= full


def test_occupation_exclude_leaves_rational():
    shape = SystemShape([(1, 1), (1, 1)])
    a = occupation_joint([GOLD, F(1, 3)], shape, 0.2, 8, exclude=0)
    b = occupation_joint([F(1, 3)], SystemShape([(1, 1)]), 0.2, 8)
    assert a == b


def test_matrix_tuple_check():
    with pytest.raises(ValueError):
        MatrixTuple([[[0.1]]]).check(SystemShape([(1, 2)]))


def test_cusp_examples():
    assert abs(cusp_occupation(0, 1, 1, 0.5, 10) - (1 - math.log(2) / 10)) <= 0.02
    assert cusp_occupation(GOLD, 1, 1, 0.4, 15, step=0.05) == 0
    want = (10 - (math.log(7) + math.log(10))) / 10
    assert abs(cusp_occupation(F(2, 7), 1, 1, 0.1, 10) - want) <= 0.02


def test_cusp_threshold_range():
    with pytest.raises(ValueError):
        cusp_occupation(0, 1, 1, 1.5, 1)
