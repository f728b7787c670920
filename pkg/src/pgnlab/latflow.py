"""Lattices ``g_t u_theta Z^d``: successive minima, witness scans, occupation times.

Everything uses the sup norm.  Successive minima come from exhaustive
enumeration inside a provable coefficient box, never from basis reduction.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import csv
import io
import math

import numpy as np

from ._exact import to_fraction

DEFAULT_BUDGET = 10 ** 8
_CHUNK = 1 << 20


class BudgetExceeded(RuntimeError):
    """The enumeration box is larger than the configured cell budget."""

    def __init__(self, message, cells=None, t=None):
        super().__init__(message)
        self.cells = cells
        self.t = t


# --- matrices and bases -----------------------------------------------------

def _as_theta(theta, m=None, n=None):
    """Return ``(float matrix, rational data or None)`` for a matrix input.

    Rational data is ``(numerators, denominator)`` with integer numerators,
    available when every entry is an int or Fraction.
    """
    if isinstance(theta, np.ndarray) and theta.dtype != object:
        arr = np.atleast_2d(np.asarray(theta, dtype=float))
        rational = None
    else:
        rows = theta
        if not isinstance(rows, (list, tuple, np.ndarray)):
            rows = [[rows]]
        elif rows and not isinstance(rows[0], (list, tuple, np.ndarray)):
            rows = [list(rows)]
        rows = [list(r) for r in rows]
        exact = all(isinstance(x, (int, Fraction, np.integer)) and not isinstance(x, bool)
                    for r in rows for x in r)
        arr = np.array([[float(x) for x in r] for r in rows], dtype=float)
        rational = None
        if exact:
            fr = [[to_fraction(x) for x in r] for r in rows]
            den = math.lcm(*(x.denominator for r in fr for x in r))
            num = np.array([[int(x * den) for x in r] for r in fr], dtype=object)
            rational = (num, den)
    if m is not None and n is not None:
        if arr.size == m * n and arr.shape != (m, n):
            arr = arr.reshape(m, n)
            if rational is not None:
                rational = (rational[0].reshape(m, n), rational[1])
        if arr.shape != (m, n):
            raise ValueError(f"theta has shape {arr.shape}, expected {(m, n)}")
    return arr, rational


@dataclass(frozen=True)
class LatticeBasis:
    """Basis matrix whose columns generate the lattice.

    Optionally factored as ``diag(scale) @ unipotent`` with an upper
    unitriangular ``unipotent``; the enumerator then works row by row in sup
    norm, and a rational unipotent (``unipotent_exact``) lets lattice vectors
    be formed in integer arithmetic.
    """

    columns: np.ndarray
    scale: np.ndarray = None
    unipotent: np.ndarray = None
    unipotent_exact: tuple = None

    @property
    def d(self):
        return self.columns.shape[0]

    @property
    def det(self):
        if self.scale is not None:
            return float(np.prod(self.scale))
        return float(np.linalg.det(self.columns))

    def vectors(self, Z):
        """Lattice vectors for integer coefficient rows ``Z`` (shape ``k x d``)."""
        Z = np.asarray(Z)
        if self.scale is None:
            return Z @ self.columns.T
        if self.unipotent_exact is not None:
            num, den = self.unipotent_exact
            if Z.size and np.abs(Z).max() * max(1, int(np.abs(num).max())) * self.d < 2 ** 62:
                exact = Z.astype(np.int64) @ num.astype(np.int64).T
                return exact / den * self.scale
        return _compensated_residuals(Z, self.unipotent) * self.scale


def _split(a):
    c = 134217729.0 * a
    hi = c - (c - a)
    return hi, a - hi


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _compensated_residuals(Z, U):
    """``Z @ U.T`` for integer ``Z`` with error-free products and sums.

    The first coordinates of ``g_t u_theta z`` are tiny differences of large
    numbers times ``e^{t/m}``; plain float products lose about
    ``|q| * 1e-16 * e^{t/m}`` there.
    """
    Zf = Z.astype(float)
    d = U.shape[0]
    out = np.empty((Z.shape[0], d))
    for i in range(d):
        acc = Zf[:, i].copy()
        comp = np.zeros(len(Zf))
        for j in range(i + 1, d):
            u = U[i, j]
            if u == 0:
                continue
            z = Zf[:, j]
            prod = u * z
            uh, ul = _split(u)
            zh, zl = _split(z)
            err = ((uh * zh - prod) + uh * zl + ul * zh) + ul * zl
            acc, e2 = _two_sum(acc, prod)
            comp += err + e2
        out[:, i] = acc + comp
    return out


def flow_matrix(m, n, t):
    """``diag(e^{t/m} I_m, e^{-t/n} I_n)``."""
    return np.diag(np.concatenate([np.full(m, math.exp(t / m)), np.full(n, math.exp(-t / n))]))


def embed_theta(theta, m=None, n=None):
    """The unipotent basis ``u_theta = [[I_m, theta], [0, I_n]]``."""
    arr, rational = _as_theta(theta, m, n)
    m, n = arr.shape
    d = m + n
    u = np.eye(d)
    u[:m, m:] = arr
    exact = None
    if rational is not None:
        num, den = rational
        big = np.zeros((d, d), dtype=object)
        for i in range(d):
            big[i, i] = den
        big[:m, m:] = num
        exact = (big, den)
    return LatticeBasis(u.copy(), np.ones(d), u, exact)


def flow_lattice(theta, t, m=None, n=None):
    """Basis of ``g_t u_theta Z^{m+n}``, kept in factored form."""
    arr, _ = _as_theta(theta, m, n)
    m, n = arr.shape
    base = embed_theta(theta, m, n)
    scale = np.concatenate([np.full(m, math.exp(t / m)), np.full(n, math.exp(-t / n))])
    return LatticeBasis(scale[:, None] * base.unipotent, scale, base.unipotent, base.unipotent_exact)


def _triangular_factors(basis):
    """``(scale, unipotent)`` when the basis is upper triangular, else None."""
    if basis.scale is not None:
        return basis.scale, basis.unipotent
    B = basis.columns
    if np.any(np.tril(B, -1) != 0) or np.any(np.diag(B) == 0):
        return None
    s = np.diag(B).copy()
    return s, B / s[:, None]


# --- enumeration ----------------------------------------------------------

def _box_cells(widths):
    cells = 1.0
    for w in widths:
        cells *= math.floor(w) + 1
    return cells


def _enumerate(basis, radius, budget):
    """Yield blocks of integer coefficient rows covering every lattice vector
    of sup norm at most ``radius`` (a superset; callers filter exactly)."""
    d = basis.d
    tri = _triangular_factors(basis)
    if tri is not None:
        s, U = tri
        half = radius / np.abs(s)
        cells = _box_cells(2 * half)
        mode = "sup"
    else:
        # sup ball of radius r sits inside the Euclidean ball of radius sqrt(d) r
        _, R = np.linalg.qr(basis.columns)
        s = np.diag(R).copy()
        U = R / s[:, None]
        rho = math.sqrt(d) * radius
        cells = _box_cells(2 * rho / np.abs(s))
        mode = "euclid"
    if cells > budget:
        raise BudgetExceeded(f"enumeration box has {cells:.3g} cells, budget {budget:.3g}",
                             cells=cells)

    def level(i, Z, used):
        # Z holds coordinates i+1..d-1; used is the squared length spent (euclid)
        c = Z @ U[i, i + 1:] if Z.shape[1] else np.zeros(Z.shape[0])
        pad = 1e-12 * (1.0 + np.abs(c))
        if mode == "sup":
            w = half[i]
        else:
            w = np.sqrt(np.maximum(rho * rho - used, 0.0)) / abs(s[i])
        lo = np.ceil(-c - w - pad).astype(np.int64)
        hi = np.floor(-c + w + pad).astype(np.int64)
        counts = np.maximum(hi - lo + 1, 0)
        total = int(counts.sum())
        if total == 0:
            return
        cum = np.cumsum(counts)
        for start in range(0, total, _CHUNK):
            flat = np.arange(start, min(total, start + _CHUNK))
            parent = np.searchsorted(cum, flat, side="right")
            zi = lo[parent] + (flat - (cum[parent] - counts[parent]))
            newZ = np.column_stack([zi, Z[parent]])
            new_used = used[parent]
            if mode == "euclid":
                new_used = new_used + (s[i] * (zi + c[parent])) ** 2
            if i == 0:
                yield newZ
            else:
                yield from level(i - 1, newZ, new_used)

    yield from level(d - 1, np.zeros((1, 0), dtype=np.int64), np.zeros(1))


def _canonical(Z):
    """Keep one of each ``+-z`` pair, the zero row excluded."""
    nz = Z != 0
    has = nz.any(axis=1)
    first = np.argmax(nz, axis=1)
    lead = Z[np.arange(len(Z)), first]
    return Z[has & (lead > 0)]


def lattice_points(basis, radius, budget=DEFAULT_BUDGET, strict=False, primitive=False):
    """All nonzero lattice vectors (one per sign pair) with sup norm <= radius.

    Returns ``(Z, norms)`` sorted by norm; ``Z`` holds integer coefficients.
    """
    tol = 1e-12 * radius
    blocks, norms = [], []
    for Z in _enumerate(basis, radius, budget):
        Z = _canonical(Z)
        if primitive and len(Z):
            Z = Z[np.gcd.reduce(np.abs(Z), axis=1) == 1]
        if not len(Z):
            continue
        v = np.abs(basis.vectors(Z)).max(axis=1)
        keep = v < radius if strict else v <= radius + tol
        if keep.any():
            blocks.append(Z[keep])
            norms.append(v[keep])
    if not blocks:
        return np.zeros((0, basis.d), dtype=np.int64), np.zeros(0)
    Z = np.concatenate(blocks)
    v = np.concatenate(norms)
    order = np.lexsort((np.arange(len(v)), v))
    return Z[order], v[order]


def _independent_picks(Z, norms, d):
    """Greedy choice of linearly independent rows in norm order (exact test)."""
    picked = []
    echelon = []  # rows as lists of Fractions in reduced form, with pivot columns

    def reduce(row):
        row = [Fraction(int(x)) for x in row]
        for piv, erow in echelon:
            if row[piv] != 0:
                f = row[piv] / erow[piv]
                row = [a - f * b for a, b in zip(row, erow)]
        return row

    start = 0
    while len(picked) < d and start < len(Z):
        # cheap float screen for rows outside the current span
        if picked:
            P = np.array([Z[i] for i in picked], dtype=float)
            _, sv, vt = np.linalg.svd(P)
            null = vt[len(picked):]
            rest = Z[start:].astype(float)
            resid = np.abs(rest @ null.T).max(axis=1)
            scale = np.abs(rest).max(axis=1)
            cand = np.nonzero(resid > 1e-9 * scale)[0]
            if not len(cand):
                break
            idx = start + int(cand[0])
        else:
            idx = start
        row = reduce(Z[idx])
        piv = next((k for k, x in enumerate(row) if x != 0), None)
        if piv is not None:
            echelon.append((piv, row))
            picked.append(idx)
        start = idx + 1
    return picked


def successive_minima(basis, budget=DEFAULT_BUDGET, return_vectors=False):
    """Sup-norm successive minima ``lambda_1 <= ... <= lambda_d``.

    The search radius starts at ``det^{1/d}`` (which bounds ``lambda_1``) and
    is raised to the bound on ``lambda_d`` implied by Minkowski's second
    theorem, ``prod lambda_k <= det``, so two or three passes suffice.
    """
    if not isinstance(basis, LatticeBasis):
        basis = LatticeBasis(np.asarray(basis, dtype=float))
    d = basis.d
    if d > 6:
        raise ValueError("exact enumeration is limited to d <= 6")
    det = abs(basis.det)
    if det == 0:
        raise ValueError("basis is singular")
    r = det ** (1.0 / d) * (1 + 1e-9)
    while True:
        Z, v = lattice_points(basis, r, budget, primitive=True)
        picks = _independent_picks(Z, v, d)
        if len(picks) == d:
            lam = v[picks]
            if return_vectors:
                return lam, Z[picks]
            return lam
        found = float(np.prod(v[picks])) if picks else 1.0
        bound = det / (found * r ** (d - 1 - len(picks))) * (1 + 1e-9)
        r = bound if bound > r * (1 + 1e-9) else 2 * r


def first_minimum(basis, budget=DEFAULT_BUDGET):
    """``lambda_1`` alone, from a single pass at radius ``det^{1/d}``."""
    d = basis.d
    r = abs(basis.det) ** (1.0 / d) * (1 + 1e-9)
    Z, v = lattice_points(basis, r, budget)
    return float(v[0])


def has_vector_shorter_than(basis, r, budget=DEFAULT_BUDGET):
    """True iff ``lambda_1 < r`` (Mahler-criterion cusp test)."""
    for Z in _enumerate(basis, r, budget):
        Z = _canonical(Z)
        if len(Z) and (np.abs(basis.vectors(Z)).max(axis=1) < r).any():
            return True
    return False


# --- trajectories -----------------------------------------------------------

@dataclass(frozen=True)
class MinimaTrajectory:
    grid: np.ndarray
    rows: np.ndarray   # rows[k] = (h_1, ..., h_d) at grid[k]

    @property
    def h1(self):
        return self.rows[:, 0]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.rows.shape[1]
        w.writerow(["t"] + [f"h_{k + 1}" for k in range(d)])
        for t, row in zip(self.grid, self.rows):
            w.writerow([f"{t:.12g}"] + [f"{h:.12g}" for h in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(x) for x in r] for r in rows[1:]])
        return cls(data[:, 0], data[:, 1:])


def h_trajectory(theta, m, n, grid, budget=DEFAULT_BUDGET, first_only=False):
    """Logs of the successive minima of ``g_t u_theta Z^d`` along ``grid``.

    With ``first_only`` only ``h_1`` is computed (the returned rows then
    have a single column), which is much cheaper at large ``t``.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be increasing")
    rows = []
    for t in grid:
        basis = flow_lattice(theta, float(t), m, n)
        try:
            if first_only:
                rows.append([math.log(first_minimum(basis, budget))])
            else:
                rows.append(np.log(successive_minima(basis, budget)))
        except BudgetExceeded as exc:
            raise BudgetExceeded(f"{exc} at t={t}", cells=exc.cells, t=float(t)) from None
    return MinimaTrajectory(grid, np.array(rows, dtype=float))


# --- Diophantine witnesses ---------------------------------------------------

@dataclass(frozen=True)
class QWitness:
    factor: int
    p: tuple
    q: tuple
    error: float   # ||theta q - p|| (sup norm)
    qnorm: int     # ||q||


def _q_box(B, n):
    axes = [np.arange(-B, B + 1, dtype=np.int64)] * n
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    return _canonical(grid)


def _int_root_floor(Q, n):
    """Largest integer B >= 0 with ``B**n <= Q``."""
    B = int(math.floor(Q ** (1.0 / n))) if Q >= 1 else 0
    while (B + 1) ** n <= Q:
        B += 1
    while B > 0 and B ** n > Q:
        B -= 1
    return B


def _residuals(theta, rational, qs):
    """Sup-norm distance from ``theta q`` to the nearest integer vector, plus that vector."""
    if rational is not None:
        num, den = rational
        big = int(np.abs(num).max()) if num.size else 0
        if len(qs) and big * int(np.abs(qs).max()) * qs.shape[1] < 2 ** 62:
            prod = qs @ num.astype(np.int64).T                      # den * theta q
            p = np.floor_divide(2 * prod + den, 2 * den)            # nearest integers
            err = np.abs(prod - p * den).max(axis=1) / den
            return err, p
    m, n = theta.shape
    p = np.rint(qs @ theta.T).astype(np.int64)
    # theta q - p through the compensated residual of u_theta acting on (-p, q)
    U = np.eye(m + n)
    U[:m, m:] = theta
    res = _compensated_residuals(np.hstack([-p, qs]), U)[:, :m]
    return np.abs(res).max(axis=1), p


def scan_Q(theta, eps, Q, budget=DEFAULT_BUDGET, factor=0):
    """Best witness ``(p, q)`` with ``||theta q - p||^m < eps/Q``, ``0 < ||q||^n <= Q``.

    ``p`` is the nearest integer vector to ``theta q``, which is optimal in
    sup norm, so the scan over all ``q`` is complete.  Returns None when no
    witness exists (i.e. ``Q`` is not in the witness set).
    """
    arr, rational = _as_theta(theta)
    m, n = arr.shape
    if Q < 1:
        raise ValueError("Q must be >= 1")
    B = _int_root_floor(Q, n)
    cells = ((2 * B + 1) ** n - 1) / 2
    if cells > budget:
        raise BudgetExceeded(f"q-box has {cells:.3g} cells, budget {budget:.3g}", cells=cells)
    if B == 0:
        return None
    qs = _q_box(B, n)
    err, p = _residuals(arr, rational, qs)
    ok = err ** m < eps / Q
    if not ok.any():
        return None
    idx = np.nonzero(ok)[0]
    qn = np.abs(qs[idx]).max(axis=1)
    best = idx[np.lexsort((qn, err[idx]))[0]]
    return QWitness(factor, tuple(int(x) for x in p[best]), tuple(int(x) for x in qs[best]),
                    float(err[best]), int(np.abs(qs[best]).max()))


@dataclass(frozen=True)
class WitnessProfile:
    """Best approximation quality by height, for batch membership tests."""

    m: int
    n: int
    heights: np.ndarray   # sorted ||q||^n
    best: np.ndarray      # running min of ||theta q - p||^m up to that height

    def contains(self, Q, eps):
        """Vectorised ``Q in Q_eps(theta)``."""
        Q = np.asarray(Q, dtype=float)
        idx = np.searchsorted(self.heights, Q, side="right") - 1
        val = np.where(idx >= 0, self.best[np.maximum(idx, 0)], np.inf)
        return val < eps / Q


def witness_profile(theta, Qmax, budget=DEFAULT_BUDGET):
    arr, rational = _as_theta(theta)
    m, n = arr.shape
    B = _int_root_floor(Qmax, n)
    cells = ((2 * B + 1) ** n - 1) / 2
    if cells > budget:
        raise BudgetExceeded(f"q-box has {cells:.3g} cells, budget {budget:.3g}", cells=cells)
    if B == 0:
        return WitnessProfile(m, n, np.zeros(0), np.zeros(0))
    qs = _q_box(B, n)
    err, _ = _residuals(arr, rational, qs)
    heights = np.abs(qs).max(axis=1).astype(float) ** n
    order = np.argsort(heights, kind="stable")
    return WitnessProfile(m, n, heights[order], np.minimum.accumulate(err[order] ** m))


@dataclass(frozen=True)
class MatrixTuple:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def check(self, shape):
        if len(self.entries) != shape.s:
            raise ValueError(f"expected {shape.s} matrices, got {len(self.entries)}")
        for theta, (m, n) in zip(self.entries, shape.pairs):
            _as_theta(theta, m, n)


def _grid(T, step):
    if step <= 0 or T <= 0:
        raise ValueError("T and step must be positive")
    N = int(round(T / step))
    return np.arange(N) * step


def occupation_joint(thetas, shape, eps, T, step=0.01, exclude=None, budget=DEFAULT_BUDGET):
    """Left Riemann sum for the time fraction of ``[0, T]`` with ``e^t`` in the
    union of ``Q_eps(theta_i)^{1/a_i}`` over factors ``i`` (0-based) other
    than ``exclude``."""
    if step > 0.1:
        raise ValueError("step must be <= 0.1")
    if isinstance(thetas, MatrixTuple):
        thetas = thetas.entries
    thetas = list(thetas)
    if len(thetas) != shape.s:
        raise ValueError("one matrix per factor")
    ts = _grid(T, step)
    hit = np.zeros(len(ts), dtype=bool)
    for i, (theta, a) in enumerate(zip(thetas, shape.weights)):
        if i == exclude:
            continue
        a = float(a)
        prof = witness_profile(theta, math.exp(a * T), budget)
        hit |= prof.contains(np.exp(a * ts), eps)
    return float(hit.mean()) if len(ts) else 0.0


def cusp_occupation(theta, m, n, r, T, step=0.01, budget=DEFAULT_BUDGET):
    """Fraction of grid times in ``[0, T)`` with ``lambda_1(g_t u_theta Z^d) < r``."""
    if not 0 < r < 1:
        raise ValueError("threshold must lie in (0, 1)")
    ts = _grid(T, step)
    inside = 0
    for t in ts:
        try:
            if has_vector_shorter_than(flow_lattice(theta, float(t), m, n), r, budget):
                inside += 1
        except BudgetExceeded as exc:
            raise BudgetExceeded(f"{exc} at t={t}", cells=exc.cells, t=float(t)) from None
    return inside / len(ts) if len(ts) else 0.0


# dimension values live in their own module; re-exported here for convenience
from .dimensions import DimensionReport, SystemShape, dimension_report  # noqa: E402,F401
