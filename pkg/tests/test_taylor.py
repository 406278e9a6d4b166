from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtverify.interval import Interval
from rtverify.taylor import (
    DomainMismatch,
    Polynomial,
    TaylorModel,
    TMVector,
    basis,
    symbol,
    tm_add,
    tm_compose_poly,
    tm_integrate_time,
    tm_mul,
    tm_range,
    tmv_eval_time,
    tmv_truncate,
)


def exact_poly(coeffs, degree, z):
    """Exact rational value of a dense polynomial at rational point z."""
    b = basis(degree)
    total = F(0)
    for c, e in zip(coeffs, b.exps):
        if c != 0.0:
            term = F(c)
            for zi, k in zip(z, e):
                term *= zi ** int(k)
            total += term
    return total


def in_tm(tm: TaylorModel, z, value: F) -> bool:
    p = exact_poly(tm.poly.coeffs, tm.degree, z)
    return p + F(tm.remainder.lo) <= value <= p + F(tm.remainder.hi)


@st.composite
def models(draw, degree=2, h=0.5):
    n = basis(degree).size
    c = draw(st.lists(st.floats(-2, 2, allow_nan=False), min_size=n, max_size=n))
    r1 = draw(st.floats(-0.1, 0.1))
    r2 = draw(st.floats(-0.1, 0.1))
    return TaylorModel(Polynomial(np.array(c), degree), Interval(min(r1, r2), max(r1, r2)), h)


def sample_point(rng, h):
    z = [F(float(v)) for v in rng.uniform(-1, 1, 3)]
    return z + [F(float(rng.uniform(0, h)))]


def representative(tm: TaylorModel, z, rng) -> F:
    """Value at z of some function inside the model's contract."""
    w = F(float(rng.uniform(0, 1)))
    rem = F(tm.remainder.lo) + w * (F(tm.remainder.hi) - F(tm.remainder.lo))
    return exact_poly(tm.poly.coeffs, tm.degree, z) + rem


X = symbol("x", 2)


def tm_of(poly, lo=0.0, hi=0.0, h=0.0):
    return TaylorModel(poly, Interval(lo, hi), h)


def test_add_examples():
    one = Polynomial.constant(1.0, 2)
    r = tm_add(tm_of(X), tm_of(one))
    assert r.poly.terms == {(1, 0, 0, 0): 1.0, (0, 0, 0, 0): 1.0}
    assert r.remainder == Interval(0, 0)
    p = tm_of(Polynomial.from_terms({(1, 1, 0, 0): 0.3, (0, 0, 0, 0): -1.0}, 2), -0.01, 0.02)
    q = tm_add(p, tm_of(Polynomial.constant(0.0, 2)))
    assert q.poly.terms == p.poly.terms and q.remainder == p.remainder
    w = tm_add(tm_of(X, -0.1, 0.1), tm_of(X, -0.1, 0.1))
    assert w.poly.terms == {(1, 0, 0, 0): 2.0}
    assert w.remainder.contains(Interval(-0.2, 0.2)) and w.remainder.width < 0.4 + 1e-15


def test_mul_examples():
    a = tm_of(Polynomial.from_terms({(0, 0, 0, 0): 1.0, (1, 0, 0, 0): 1.0}, 2))
    b = tm_of(Polynomial.from_terms({(0, 0, 0, 0): 1.0, (1, 0, 0, 0): -1.0}, 2))
    r = tm_mul(a, b)
    assert r.poly.terms == {(0, 0, 0, 0): 1.0, (2, 0, 0, 0): -1.0}
    assert r.remainder == Interval(0, 0)
    r1 = tm_mul(a, b, max_degree=1)
    assert r1.poly.terms == {(0, 0, 0, 0): 1.0}
    assert r1.remainder.contains(Interval(-1.0, 0.0))
    z = tm_mul(a, tm_of(Polynomial.constant(0.0, 2)))
    assert z.poly.terms == {} and z.remainder == Interval(0, 0)


def test_range_uses_even_power_tightening():
    sq = tm_of(Polynomial.from_terms({(2, 0, 0, 0): 1.0}, 2))
    r = tm_range(sq)
    assert r.lo == 0.0 and r.hi >= 1.0
    lin = tm_range(tm_of(X, -0.5, 0.5))
    assert lin.contains(Interval(-1.5, 1.5))


def test_compose_examples():
    r = tm_compose_poly([0.0, 1.0], tm_of(X, -0.1, 0.2))
    assert r.poly.terms == X.terms and r.remainder.contains(Interval(-0.1, 0.2))
    sq = tm_compose_poly([0.0, 0.0, 1.0], tm_of(X))
    assert sq.poly.terms == {(2, 0, 0, 0): 1.0} and sq.remainder == Interval(0, 0)
    q = tm_compose_poly([0.25, 0.5, 0.25], tm_of(X))
    assert q.poly.terms == {(0, 0, 0, 0): 0.25, (1, 0, 0, 0): 0.5, (2, 0, 0, 0): 0.25}
    assert q.remainder == Interval(0, 0)


def test_integrate_examples():
    one = tm_of(Polynomial.constant(2.0, 2), h=0.1)
    r = tm_integrate_time(one)
    assert r.poly.terms == {(0, 0, 0, 1): 2.0}
    with pytest.raises(DomainMismatch):
        tm_integrate_time(one, h=0.2)


def test_domain_mismatch():
    with pytest.raises(DomainMismatch):
        tm_add(tm_of(X, h=0.1), tm_of(X, h=0.2))
    with pytest.raises(DomainMismatch):
        tm_mul(tm_of(X), tm_of(symbol("x", 3)))


@settings(max_examples=60, deadline=None)
@given(models(), models(), st.integers(0, 2**31 - 1))
def test_add_mul_sound(a, b, seed):
    rng = np.random.default_rng(seed)
    s = tm_add(a, b)
    p = tm_mul(a, b)
    p1 = tm_mul(a, b, max_degree=1)
    for _ in range(17):
        z = sample_point(rng, a.h)
        ga, gb = representative(a, z, rng), representative(b, z, rng)
        assert in_tm(s, z, ga + gb)
        assert in_tm(p, z, ga * gb)
        assert in_tm(p1, z, ga * gb)


@settings(max_examples=60, deadline=None)
@given(models(), st.lists(st.floats(-1.5, 1.5, allow_nan=False), min_size=1, max_size=4), st.integers(0, 2**31 - 1))
def test_compose_sound(a, u, seed):
    rng = np.random.default_rng(seed)
    r = tm_compose_poly(u, a)
    for _ in range(17):
        z = sample_point(rng, a.h)
        g = representative(a, z, rng)
        val = sum((F(c) * g**k for k, c in enumerate(u)), F(0))
        assert in_tm(r, z, val)


@settings(max_examples=60, deadline=None)
@given(models(h=0.3), st.integers(0, 2**31 - 1))
def test_integrate_sound(a, seed):
    # representative: poly + constant rho; its antiderivative is exact
    rng = np.random.default_rng(seed)
    r = tm_integrate_time(a)
    w = F(float(rng.uniform(0, 1)))
    rho = F(a.remainder.lo) + w * (F(a.remainder.hi) - F(a.remainder.lo))
    b = basis(a.degree)
    for _ in range(17):
        z = sample_point(rng, a.h)
        t = z[3]
        val = rho * t
        for c, e in zip(a.poly.coeffs, b.exps):
            if c != 0.0:
                term = F(c) * t ** (int(e[3]) + 1) / (int(e[3]) + 1)
                for zi, k in zip(z[:3], e[:3]):
                    term *= zi ** int(k)
                val += term
        assert in_tm(r, z, val)


@settings(max_examples=50, deadline=None)
@given(models(degree=3, h=0.2))
def test_degree_cap(a):
    for d in (1, 2, 3):
        out = tm_mul(a, a, max_degree=d)
        assert out.degree == d
        assert out.poly.coeffs.size == basis(d).size
        assert all(sum(e) <= d for e in out.poly.terms)


@settings(max_examples=60, deadline=None)
@given(models(), models(), st.floats(0, 0.5), st.floats(0, 0.5))
def test_remainder_inclusion_monotone(a, b, wl, wh):
    wide = TaylorModel(a.poly, Interval(a.remainder.lo - wl, a.remainder.hi + wh), a.h)
    for op in (lambda x: tm_add(x, b), lambda x: tm_mul(x, b), lambda x: tm_compose_poly([0.1, -0.5, 0.3], x)):
        assert op(wide).remainder.contains(op(a).remainder)


def test_eval_time_and_truncate_sound():
    rng = np.random.default_rng(5)
    for _ in range(50):
        c = rng.uniform(-1, 1, (2, basis(3).size))
        v = TMVector(c, [-0.01, 0.0], [0.0, 0.02], 3, 0.1)
        e = tmv_eval_time(v, 0.07)
        t2 = tmv_truncate(v, 2)
        for _ in range(10):
            z = sample_point(rng, 0.1)
            for row in range(2):
                base = exact_poly(c[row], 3, z)
                at = exact_poly(c[row], 3, z[:3] + [F(0.07)])
                assert in_tm(TaylorModel.from_vector(e, row), z, at)
                assert in_tm(TaylorModel.from_vector(t2, row), z, base)


def test_from_box_represents_box():
    v = TMVector.from_box([0.1, 2.0, -0.5], [0.3, 2.0, 0.5], 2)
    lo, hi = v.range()
    assert np.all(lo <= [0.1, 2.0, -0.5]) and np.all(hi >= [0.3, 2.0, 0.5])
    assert np.all(hi - lo < np.array([0.2, 0.0, 1.0]) + 1e-12)
