import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtverify.interval import Interval, iv_add, iv_mul, iv_trig

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def intervals(draw):
    a, b = draw(finite), draw(finite)
    return Interval(min(a, b), max(a, b))


@st.composite
def nested(draw):
    outer = draw(intervals())
    u = draw(st.floats(0, 1))
    v = draw(st.floats(0, 1))
    lo = outer.lo + min(u, v) * (outer.hi - outer.lo)
    hi = outer.lo + max(u, v) * (outer.hi - outer.lo)
    lo, hi = max(lo, outer.lo), min(hi, outer.hi)
    return Interval(min(lo, hi), max(lo, hi)), outer


def contains_exact(iv: Interval, q: Fraction) -> bool:
    return Fraction(iv.lo) <= q <= Fraction(iv.hi)


def test_rejects_inverted_and_nan():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
    with pytest.raises(ValueError):
        Interval(math.nan, 0.0)


def test_add_examples():
    assert iv_add(Interval(1, 2), Interval(3, 4)).contains(Interval(4, 6))
    assert iv_add(Interval(0, 0), Interval(-0.3, 0.7)).contains(Interval(-0.3, 0.7))
    assert iv_add(Interval(-1, 1), Interval(-1, 1)).contains(Interval(-2, 2))


def test_exact_add_is_not_widened():
    assert iv_add(Interval(1, 2), Interval(3, 4)) == Interval(4, 6)


def test_mul_examples():
    assert iv_mul(Interval(-1, 2), Interval(3, 4)).contains(Interval(-4, 8))
    assert iv_mul(Interval(0, 0), Interval(-5, 3)) == Interval(0, 0)
    assert iv_mul(Interval(2, 3), Interval(2, 3)).contains(Interval(4, 9))


def test_trig_examples():
    assert iv_trig(Interval(0, 0), "cos").contains(1.0)
    s = iv_trig(Interval(0, math.pi), "sin")
    assert s.contains(Interval(0, 1)) and s.hi == 1.0
    c = iv_trig(Interval(0, math.pi), "cos")
    assert c.contains(Interval(-1, 1))
    assert iv_trig(Interval(-10, 10), "sin") == Interval(-1, 1)
    with pytest.raises(ValueError):
        iv_trig(Interval(0, 1), "tan")


@settings(max_examples=300, deadline=None)
@given(intervals(), intervals(), st.floats(0, 1), st.floats(0, 1))
def test_add_mul_sound_against_rationals(a, b, u, v):
    x = Fraction(a.lo) + Fraction(u) * (Fraction(a.hi) - Fraction(a.lo))
    y = Fraction(b.lo) + Fraction(v) * (Fraction(b.hi) - Fraction(b.lo))
    assert contains_exact(iv_add(a, b), x + y)
    assert contains_exact(iv_mul(a, b), x * y)


@settings(max_examples=200, deadline=None)
@given(nested(), nested())
def test_inclusion_monotonicity(pa, pb):
    (a, A), (b, B) = pa, pb
    assert iv_add(A, B).contains(iv_add(a, b))
    assert iv_mul(A, B).contains(iv_mul(a, b))
    for fn in ("sin", "cos"):
        small = Interval(a.lo * 1e-5, a.hi * 1e-5)
        big = Interval(A.lo * 1e-5, A.hi * 1e-5)
        assert iv_trig(big, fn).contains(iv_trig(small, fn))


def test_point_pairs_sampling():
    # 10^4 random point pairs from random intervals, checked exactly
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        e = rng.uniform(-100, 100, 4)
        a = Interval(min(e[0], e[1]), max(e[0], e[1]))
        b = Interval(min(e[2], e[3]), max(e[2], e[3]))
        x = float(rng.uniform(a.lo, a.hi))
        y = float(rng.uniform(b.lo, b.hi))
        assert contains_exact(iv_add(a, b), Fraction(x) + Fraction(y))
        assert contains_exact(iv_mul(a, b), Fraction(x) * Fraction(y))


def test_trig_dense_sampling_oracle():
    import mpmath

    mpmath.mp.prec = 120
    rng = np.random.default_rng(2)
    for _ in range(300):
        lo = rng.uniform(-8, 8)
        hi = lo + rng.uniform(0, 3)
        a = Interval(lo, hi)
        for name, fn in (("sin", mpmath.sin), ("cos", mpmath.cos)):
            enc = iv_trig(a, name)
            assert -1.0 <= enc.lo <= enc.hi <= 1.0
            for t in np.linspace(lo, hi, 41):
                val = fn(mpmath.mpf(float(t)))
                assert mpmath.mpf(enc.lo) <= val <= mpmath.mpf(enc.hi)
            # tight when no extremum is crossed: width within the Lipschitz bound
            assert enc.hi - enc.lo <= (hi - lo) + 1e-12 or enc.hi == 1.0 or enc.lo == -1.0
