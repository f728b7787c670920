import random
from fractions import Fraction as F

import pytest

from pgnlab.dimensions import SystemShape, dimension_report


def test_example_pair_of_1x1():
    r = dimension_report(SystemShape([(1, 1), (1, 1)]))
    assert r.dim_D == F(3, 2)
    assert r.dim_hom == F(11, 2)
    assert r.dim_space == 6


def test_sing_2x1():
    r = dimension_report(SystemShape([(2, 1)]))
    assert r.sing == (F(4, 3),)
    assert r.dim_D is None


def test_sing_1x1_is_zero():
    assert dimension_report(SystemShape([(1, 1)])).sing == (0,)


def test_delta_half():
    r = dimension_report(SystemShape([(1, 1), (1, 1)]), F(1, 2))
    assert r.dim_D_delta == F(7, 4)


def test_b_consistency():
    sh = SystemShape([(2, 3), (1, 4)], [1, 2.5])
    for b, (m, n) in zip(sh.b, sh.pairs):
        assert b * (m + n) == m * n
    assert sh.special_weight_shape().weights == sh.b


def test_bad_shapes():
    with pytest.raises(ValueError):
        SystemShape([(0, 1)])
    with pytest.raises(ValueError):
        SystemShape([(1, 1)], [-1])
    with pytest.raises(ValueError):
        dimension_report(SystemShape([(1, 1), (1, 2)]), 0)


def test_permutation_and_delta_linearity():
    rng = random.Random(7)
    for _ in range(100):
        s = rng.randint(2, 4)
        sh = SystemShape([(rng.randint(1, 4), rng.randint(1, 4)) for _ in range(s)])
        delta = F(rng.randint(1, 20), 20)
        r = dimension_report(sh, delta)
        order = list(range(s))
        rng.shuffle(order)
        assert dimension_report(sh.permuted(order), delta).min_b == r.min_b
        assert r.dim_D_delta - r.dim_D == (1 - delta) * r.min_b
        assert all(isinstance(v, F) for v in (r.dim_D, r.dim_D_delta, r.dim_hom, r.dim_hom_delta))
