from fractions import Fraction as F

import pytest

from diolab import sampling
from diolab.numerics import RefinementExhausted
from diolab.sampling import (cantor_source, curve_source, explicit_source,
                             ifs_source, lebesgue_source, quadratic_source,
                             refine_sample, sample)


def ternary_digits(x: F, n: int):
    out = []
    for _ in range(n):
        x *= 3
        d = int(x)
        out.append(d)
        x -= d
    return out


def test_cantor_digit_convention():
    # digits (2, 0, 2) evaluate to 2/3 + 0 + 2/27 = 20/27
    assert F(2, 3) + F(0, 9) + F(2, 27) == F(20, 27)
    th = sample(cantor_source(40, seed=4), 0)
    x = th.entries[0][0]
    assert 0 <= x <= 1
    assert set(ternary_digits(x, 40)) <= {0, 2}


def test_curve_powers():
    th = sample(curve_source(3, digit_budget=30, seed=1), 0)
    x = th.entries[0][0]
    assert th.entries[0][1] == x ** 2
    assert th.entries[0][2] == x ** 3
    # (x, x^2) at x = 1/2 is (1/2, 1/4)
    assert (F(1, 2) ** 2) == F(1, 4)


def test_quadratic_golden():
    th = sample(quadratic_source(1, -1, -1))
    phi = (1 + 5 ** 0.5) / 2
    lo, err = th.entries[0][0], th.errs[0][0]
    assert float(lo) <= phi <= float(lo + err)
    gen = th.cf_stream()
    assert [next(gen) for _ in range(6)] == [1] * 6


def test_reproducibility_bit_identical():
    src = lebesgue_source(2, 2, digit_budget=50, seed=77)
    a = sample(src, 3)
    b = sample(src, 3)
    assert a.entries == b.entries and a.errs == b.errs
    c = sample(src, 4)
    assert c.entries != a.entries


def test_refine_prefix_stability():
    src = cantor_source(10, seed=3)
    th = sample(src, 0)
    th2 = refine_sample(th, 10)
    assert th2.budget == 20
    old = ternary_digits(th.entries[0][0], 10)
    new = ternary_digits(th2.entries[0][0], 20)
    assert new[:10] == old
    assert th2.errs[0][0] == F(1, 3 ** 20)


def test_refine_lebesgue_extends_stream():
    src = lebesgue_source(1, 1, digit_budget=20, seed=9)
    th = sample(src, 5)
    th2 = refine_sample(th, 15)
    # first 20 decimal digits unchanged, 15 more appended
    assert int(th2.entries[0][0] * 10 ** 20) == int(th.entries[0][0] * 10 ** 20)
    assert th2.errs[0][0] == F(1, 10 ** 35)
    # re-sampling at the larger budget reproduces the refinement bit for bit
    assert sampling._sample_at(src, 5, 35).entries == th2.entries


def test_refine_explicit_noop():
    th = sample(explicit_source([[F(3, 7)]]), 0)
    assert refine_sample(th, 100) is th


def test_refine_hard_cap():
    src = lebesgue_source(1, 1, digit_budget=30, seed=1, max_digits=40)
    th = sample(src, 0)
    with pytest.raises(RefinementExhausted):
        refine_sample(th, 1000)


def test_ifs_cantor_equivalent():
    src = ifs_source([F(1, 3), F(1, 3)], [F(0), F(2, 3)], [F(1, 2), F(1, 2)],
                     depth=25, seed=6)
    th = sample(src, 0)
    x = th.entries[0][0]
    assert 0 <= x <= 1
    assert set(ternary_digits(x, 25)) <= {0, 2}
    # truncation error bound (max ratio)^depth
    assert th.errs[0][0] <= F(1, 3) ** 25 * 2


def test_ifs_validation():
    with pytest.raises(ValueError):
        ifs_source([F(1, 2)], [F(0)], [F(1, 3)], depth=5, seed=0)  # probs != 1
    with pytest.raises(ValueError):
        ifs_source([F(3, 2)], [F(0)], [F(1)], depth=5, seed=0)  # not contracting


def test_disjoint_streams_for_entries():
    src = lebesgue_source(2, 1, digit_budget=30, seed=12)
    th = sample(src, 0)
    assert th.entries[0][0] != th.entries[1][0]
