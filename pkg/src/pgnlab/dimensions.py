"""System shapes and the closed-form Hausdorff dimension values."""

from dataclasses import dataclass
from fractions import Fraction

from ._exact import to_fraction


@dataclass(frozen=True)
class SystemShape:
    """Factor shapes ``(m_i, n_i)`` together with flow weights ``a_i``."""

    pairs: tuple
    weights: tuple = None

    def __post_init__(self):
        pairs = tuple((int(m), int(n)) for m, n in self.pairs)
        if not pairs:
            raise ValueError("need at least one factor")
        if any(m < 1 or n < 1 for m, n in pairs):
            raise ValueError("all m_i, n_i must be positive")
        weights = self.weights
        if weights is None:
            weights = (1,) * len(pairs)
        weights = tuple(to_fraction(a) for a in weights)
        if len(weights) != len(pairs):
            raise ValueError("one weight per factor")
        if any(a <= 0 for a in weights):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "weights", weights)

    @property
    def s(self):
        return len(self.pairs)

    @property
    def b(self):
        return tuple(Fraction(m * n, m + n) for m, n in self.pairs)

    def special_weight_shape(self):
        """Same factors, weighted by ``b_i``: the flow with one positive Lyapunov exponent."""
        return SystemShape(self.pairs, self.b)

    def permuted(self, order):
        return SystemShape(tuple(self.pairs[i] for i in order),
                           tuple(self.weights[i] for i in order))


@dataclass(frozen=True)
class DimensionReport:
    shape: SystemShape
    delta: Fraction
    dim_matrices: Fraction
    dim_space: int
    min_b: Fraction
    dim_D: Fraction          # equals dim D^e
    dim_D_delta: Fraction    # equals dim D^e_delta
    dim_hom: Fraction        # dim D(F_a^+, X)
    dim_hom_delta: Fraction
    sing: tuple              # per factor dim Sing_{m,n}
    divergent_single: tuple  # per factor dim D(F_{m,n}^+, Y_{m+n})
    delta_single: tuple      # per factor dim D_delta(F_{m,n}^+, Y_{m+n})

    def as_dict(self):
        from ._exact import format_fraction as f
        out = {
            "pairs": [list(p) for p in self.shape.pairs],
            "delta": f(self.delta),
            "dim_M": f(self.dim_matrices),
            "dim_X": f(self.dim_space),
            "min_b": f(self.min_b),
            "sing": [f(x) for x in self.sing],
            "divergent_single": [None if x is None else f(x) for x in self.divergent_single],
            "delta_single": [f(x) for x in self.delta_single],
        }
        for key in ("dim_D", "dim_D_delta", "dim_hom", "dim_hom_delta"):
            val = getattr(self, key)
            out[key] = None if val is None else f(val)
        return out


def dimension_report(shape, delta=1):
    """Exact dimension values for ``shape`` at escape fraction ``delta``.

    Product-space entries need ``s >= 2`` and are ``None`` otherwise.
    ``Sing_{1,1}`` is the rationals, so its dimension is reported as 0, and
    the single-factor divergent-trajectory value is ``None`` for ``(1, 1)``.
    """
    delta = to_fraction(delta)
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    dim_m = sum(Fraction(m * n) for m, n in shape.pairs)
    dim_x = sum((m + n) ** 2 - 1 for m, n in shape.pairs)
    bs = shape.b
    min_b = min(bs)
    sing = tuple(Fraction(0) if (m, n) == (1, 1) else m * n - b
                 for (m, n), b in zip(shape.pairs, bs))
    div_single = tuple(None if (m, n) == (1, 1) else Fraction((m + n) ** 2 - 1) - b
                       for (m, n), b in zip(shape.pairs, bs))
    delta_single = tuple(Fraction((m + n) ** 2 - 1) - delta * b
                         for (m, n), b in zip(shape.pairs, bs))
    if shape.s >= 2:
        dim_d = dim_m - min_b
        dim_dd = dim_m - delta * min_b
        hom = dim_x - min_b
        hom_d = dim_x - delta * min_b
    else:
        dim_d = dim_dd = hom = hom_d = None
    return DimensionReport(shape, delta, dim_m, dim_x, min_b, dim_d, dim_dd, hom, hom_d,
                           sing, div_single, delta_single)
