"""Closed real intervals with outward rounding.

Rounding is handled after the fact: an endpoint that rounded inward is
pushed one ulp outward with ``nextafter``. For a single IEEE operation in
round-to-nearest mode the exact result is within half an ulp of the
computed one, so a one-ulp push always contains it. The scalar add and
multiply detect the rounding direction exactly (TwoSum, rational
comparison), so they return the directed-rounded endpoints and stay
inclusion monotone.

Vectorised helpers (``down``, ``up``, ``gamma``) are shared with the Taylor
model and network code, which work on numpy arrays of endpoints.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

UNIT_ROUNDOFF = 2.0 ** -53
_INF = math.inf
TWO_PI = 2.0 * math.pi


def down(x):
    """One ulp toward -inf (scalar or array)."""
    if isinstance(x, np.ndarray):
        return np.nextafter(x, -np.inf)
    return math.nextafter(x, -_INF)


def up(x):
    """One ulp toward +inf (scalar or array)."""
    if isinstance(x, np.ndarray):
        return np.nextafter(x, np.inf)
    return math.nextafter(x, _INF)


def gamma(n: int) -> float:
    """Higham's gamma_n: relative error bound for n chained flops."""
    nu = (n + 2) * UNIT_ROUNDOFF
    return up(nu / (1.0 - nu))


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoint is NaN")
        if lo > hi:
            raise ValueError(f"inverted interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @classmethod
    def hull_of(cls, values: Iterable[float]) -> "Interval":
        vals = list(values)
        return cls(min(vals), max(vals))

    @property
    def width(self) -> float:
        return up(self.hi - self.lo)

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def rad(self) -> float:
        m = self.mid
        return up(max(self.hi - m, m - self.lo))

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def contains(self, other: "Interval | float") -> bool:
        if isinstance(other, Interval):
            return self.lo <= other.lo and other.hi <= self.hi
        return self.lo <= other <= self.hi

    __contains__ = contains

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def inflate(self, r: float) -> "Interval":
        return Interval(down(self.lo - r), up(self.hi + r))

    def __add__(self, other):
        return iv_add(self, _as_interval(other))

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return iv_add(self, -_as_interval(other))

    def __rsub__(self, other):
        return iv_add(_as_interval(other), -self)

    def __mul__(self, other):
        return iv_mul(self, _as_interval(other))

    __rmul__ = __mul__

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def _as_interval(x) -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval.point(float(x))


def _two_sum_err(a: float, b: float, s: float) -> float:
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def iv_add(a: Interval, b: Interval) -> Interval:
    lo = a.lo + b.lo
    hi = a.hi + b.hi
    # TwoSum gives the exact rounding error, so each endpoint is moved only
    # when rounding went the wrong way; this keeps results directed-rounded
    if math.isinf(lo) or _two_sum_err(a.lo, b.lo, lo) < 0.0:
        lo = down(lo)
    if math.isinf(hi) or _two_sum_err(a.hi, b.hi, hi) > 0.0:
        hi = up(hi)
    return Interval(lo, hi)


def _mul_down(x: float, y: float) -> float:
    p = x * y
    if math.isinf(p) or (x != 0.0 and y != 0.0 and Fraction(p) > Fraction(x) * Fraction(y)):
        return down(p)
    return p


def _mul_up(x: float, y: float) -> float:
    p = x * y
    if math.isinf(p) or (x != 0.0 and y != 0.0 and Fraction(p) < Fraction(x) * Fraction(y)):
        return up(p)
    return p


def iv_mul(a: Interval, b: Interval) -> Interval:
    pairs = ((a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi))
    # exact rational comparison decides the rounding direction, which also
    # catches products that underflowed to zero
    return Interval(min(_mul_down(x, y) for x, y in pairs), max(_mul_up(x, y) for x, y in pairs))


def _has_point(lo: float, hi: float, phase: float) -> bool:
    """True if some phase + 2k*pi lies in [lo, hi], decided conservatively."""
    slack = 4.0 * UNIT_ROUNDOFF * max(1.0, abs(lo), abs(hi))
    k = math.ceil((lo - slack - phase) / TWO_PI)
    return phase + k * TWO_PI <= hi + slack


def iv_trig(a: Interval, which: Literal["sin", "cos"]) -> Interval:
    """Enclosure of sin or cos over ``a``."""
    if which not in ("sin", "cos"):
        raise ValueError(f"unknown function {which!r}")
    if a.hi - a.lo >= TWO_PI:
        return Interval(-1.0, 1.0)
    fn = math.sin if which == "sin" else math.cos
    ends = (fn(a.lo), fn(a.hi))
    # libm sin/cos are accurate to within an ulp; two ulps outward covers it
    lo = down(down(min(ends)))
    hi = up(up(max(ends)))
    peak, trough = (math.pi / 2, -math.pi / 2) if which == "sin" else (0.0, math.pi)
    if _has_point(a.lo, a.hi, peak):
        hi = 1.0
    if _has_point(a.lo, a.hi, trough):
        lo = -1.0
    return Interval(max(lo, -1.0), min(hi, 1.0))


# ---------------------------------------------------------------------------
# array helpers: endpoints held as parallel numpy arrays (lo, hi)

def add_arrays(alo, ahi, blo, bhi):
    return down(alo + blo), up(ahi + bhi)


def mul_arrays(alo, ahi, blo, bhi):
    p = np.stack([alo * blo, alo * bhi, ahi * blo, ahi * bhi])
    return down(p.min(axis=0)), up(p.max(axis=0))


def symmetric(rad):
    """Interval arrays [-rad, rad]."""
    return -rad, rad
