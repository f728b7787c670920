"""Conversion helpers shared by the exact (Fraction based) parts of the package."""

from fractions import Fraction
from numbers import Rational

import numpy as np


def to_fraction(x):
    """Return ``x`` as a Fraction without rounding.

    Floats are converted exactly (binary expansion), strings may be ``"p/q"``
    or decimal literals, which are read as the decimal they spell.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(float(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


def parse_number(text):
    """Parse a CLI/JSON number: ``"p/q"`` stays exact, decimals become floats."""
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    try:
        return int(text)
    except ValueError:
        return float(text)


def fraction_to_json(x):
    """Encode a Fraction losslessly: a plain number when exact, else ``[p, q]``."""
    x = to_fraction(x)
    if x.denominator == 1:
        return x.numerator
    f = float(x)
    if Fraction(f) == x:
        return f
    return [x.numerator, x.denominator]


def fraction_from_json(v):
    if isinstance(v, list):
        if len(v) != 2:
            raise ValueError(f"fraction pair must have two entries, got {v!r}")
        return Fraction(int(v[0]), int(v[1]))
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, bool):
        raise ValueError("boolean is not a number")
    return to_fraction(v)


def format_fraction(x):
    x = to_fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"
