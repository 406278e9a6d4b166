"""Taylor models over three normalized state symbols and one local-time symbol.

A Taylor model (TM) is a polynomial ``p`` in the symbols ``(x, y, theta, t)``
together with a remainder interval ``I``; it encloses every function ``g``
with ``g(z) in p(z) + I`` for all ``z`` in the domain. State symbols range
over ``[-1, 1]`` and the time symbol over ``[0, h]`` with ``h <= 1``, so no
monomial exceeds 1 in magnitude. That fact is used throughout to turn
per-coefficient floating-point error bounds into remainder widenings.

Polynomials are stored densely over a graded monomial basis, so the
monomials of total degree ``<= k`` are always a prefix of the basis for any
higher degree. ``TMVector`` holds ``n`` models that share one domain as a
coefficient matrix; the scalar ``TaylorModel`` API is a thin wrapper over it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .interval import Interval, UNIT_ROUNDOFF, down, gamma, up

SYMBOLS = ("x", "y", "theta", "t")
N_SYMBOLS = 4
TIME = 3

_U = UNIT_ROUNDOFF


class DomainMismatch(ValueError):
    """Raised when combining Taylor models with different domains or degrees."""


class MonomialBasis:
    """All monomials in four symbols with total degree <= ``degree``."""

    def __init__(self, degree: int):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        self.degree = degree
        exps = [e for e in product(range(degree + 1), repeat=N_SYMBOLS) if sum(e) <= degree]
        exps.sort(key=lambda e: (sum(e), tuple(-k for k in e)))
        self.exps = np.array(exps, dtype=np.int64).reshape(-1, N_SYMBOLS)
        self.size = len(exps)
        self.total = self.exps.sum(axis=1)
        self.index = {e: i for i, e in enumerate(exps)}
        self.time_power = self.exps[:, TIME]
        self.odd_state = (self.exps[:, :TIME] % 2 == 1).any(axis=1)
        self._ranges: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def size_upto(self, degree: int) -> int:
        return int(np.count_nonzero(self.total <= degree))

    def ranges(self, h: float) -> tuple[np.ndarray, np.ndarray]:
        """Per-monomial enclosures over the domain; even state powers map to [0, 1]."""
        if h not in self._ranges:
            scale = np.ones(self.size)
            for i, k in enumerate(self.time_power):
                s = 1.0
                for _ in range(k):
                    p, ok = _products_exact(np.float64(s), np.float64(h))
                    s = float(p) if ok else up(float(p))
                scale[i] = s
            lo = np.where(self.odd_state, -scale, 0.0)
            hi = scale.copy()
            const = self.total == 0
            lo[const] = 1.0
            hi[const] = 1.0
            self._ranges[h] = (lo, hi)
        return self._ranges[h]


@lru_cache(maxsize=None)
def basis(degree: int) -> MonomialBasis:
    return MonomialBasis(degree)


@lru_cache(maxsize=None)
def _product_map(degree: int) -> np.ndarray:
    """0/1 matrix sending the flattened outer product of two coefficient
    vectors (degree ``degree``) onto the basis of degree ``2*degree``."""
    b, b2 = basis(degree), basis(2 * degree)
    S = np.zeros((b.size * b.size, b2.size))
    for i, ei in enumerate(b.exps):
        for j, ej in enumerate(b.exps):
            S[i * b.size + j, b2.index[tuple(ei + ej)]] = 1.0
    return S


@lru_cache(maxsize=None)
def _integration_map(degree: int) -> tuple[np.ndarray, np.ndarray]:
    b, b1 = basis(degree), basis(degree + 1)
    target = np.empty(b.size, dtype=np.int64)
    factor = np.empty(b.size)
    for i, e in enumerate(b.exps):
        e1 = e.copy()
        e1[TIME] += 1
        target[i] = b1.index[tuple(e1)]
        factor[i] = 1.0 / e1[TIME]
    return target, factor


@lru_cache(maxsize=None)
def _time_substitution(degree: int, tv: float) -> tuple[np.ndarray, np.ndarray]:
    """Matrix replacing t by the constant ``tv``, and a matrix of upper bounds
    on |tv^k| used for rounding error."""
    b = basis(degree)
    E = np.zeros((b.size, b.size))
    for i, e in enumerate(b.exps):
        e0 = e.copy()
        e0[TIME] = 0
        E[i, b.index[tuple(e0)]] = tv ** int(e[TIME])
    return E, np.abs(E)


def _widen(lo, hi, err):
    return down(lo - err), up(hi + err)


_SPLITTER = 134217729.0  # 2**27 + 1
_SAFE_HI = 2.0 ** 995
_SAFE_LO = 2.0 ** -960


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def _products_exact(x, y):
    """Elementwise ``x * y`` and whether each product is exact (Dekker's
    TwoProduct; products near the underflow or overflow range count as
    inexact)."""
    p = x * y
    x1, x2 = _split(x)
    y1, y2 = _split(y)
    e = ((x1 * y1 - p) + x1 * y2 + x2 * y1) + x2 * y2
    zero = (x == 0.0) | (y == 0.0)
    normal = (np.abs(x) < _SAFE_HI) & (np.abs(y) < _SAFE_HI) & (np.abs(p) >= _SAFE_LO)
    return p, zero | (normal & (e == 0.0))


def _sums_exact(P):
    """Per row: True if any summation order of the row's terms is exact,
    i.e. all terms are multiples of a common power of two and every partial
    sum fits in the 53-bit significand."""
    P = np.atleast_2d(P)
    nz = P != 0.0
    m, e = np.frexp(P)
    mi = (np.abs(m) * 2.0 ** 53).astype(np.int64)
    low = np.where(nz, mi & -mi, 1)
    lowbit = e - 53 + np.log2(low).astype(np.int64)
    big = 1 << 20
    lo = np.where(nz, lowbit, big).min(axis=1)
    hi = np.where(nz, e, -big).max(axis=1)
    n = nz.sum(axis=1)
    grow = np.ceil(np.log2(np.maximum(n, 1))).astype(np.int64)
    return (n <= 1) | (hi + grow - lo <= 53)


def _range_terms(c, mlo, mhi):
    """Interval sum of ``c * [mlo, mhi]`` per row, exact where possible."""
    t1, ok1 = _products_exact(c, mlo)
    t2, ok2 = _products_exact(c, mhi)
    lo = np.minimum(t1, t2).sum(axis=1)
    hi = np.maximum(t1, t2).sum(axis=1)
    err = up(gamma(c.shape[1] + 1) * np.maximum(np.abs(t1), np.abs(t2)).sum(axis=1))
    exact = (ok1 & ok2).all(axis=1) & _sums_exact(np.hstack([t1, t2]))
    return _absorb_exact(lo, hi, np.where(exact, 0.0, err))


@dataclass
class TMVector:
    """``n`` Taylor models on a common domain, coefficients row-wise."""

    coeffs: np.ndarray
    rem_lo: np.ndarray
    rem_hi: np.ndarray
    degree: int
    h: float = 0.0

    def __post_init__(self):
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        n = self.coeffs.shape[0]
        self.rem_lo = np.broadcast_to(np.asarray(self.rem_lo, dtype=float), (n,)).copy()
        self.rem_hi = np.broadcast_to(np.asarray(self.rem_hi, dtype=float), (n,)).copy()
        if self.coeffs.shape[1] != basis(self.degree).size:
            raise ValueError("coefficient count does not match degree")
        if not 0.0 <= self.h <= 1.0:
            raise ValueError("time domain must satisfy 0 <= h <= 1")
        if np.any(self.rem_lo > self.rem_hi):
            raise ValueError("inverted remainder interval")

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def basis(self) -> MonomialBasis:
        return basis(self.degree)

    def __len__(self):
        return self.n

    def __getitem__(self, idx) -> "TMVector":
        idx = np.atleast_1d(np.arange(self.n)[idx])
        return TMVector(self.coeffs[idx], self.rem_lo[idx], self.rem_hi[idx], self.degree, self.h)

    def with_remainder(self, lo, hi) -> "TMVector":
        return TMVector(self.coeffs, lo, hi, self.degree, self.h)

    def poly_only(self) -> "TMVector":
        z = np.zeros(self.n)
        return TMVector(self.coeffs, z, z, self.degree, self.h)

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, values, degree: int, h: float = 0.0) -> "TMVector":
        values = np.atleast_1d(np.asarray(values, dtype=float))
        c = np.zeros((values.size, basis(degree).size))
        c[:, 0] = values
        z = np.zeros(values.size)
        return cls(c, z, z, degree, h)

    @classmethod
    def from_box(cls, lo, hi, degree: int, h: float = 0.0) -> "TMVector":
        """Affine parameterization of a box (up to 3 dims) onto [-1, 1]^k."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.size > TIME:
            raise ValueError("at most three state dimensions")
        if np.any(lo > hi):
            raise ValueError("inverted box")
        mid = 0.5 * (lo + hi)
        r_hi, e_hi = _two_sum(hi, -mid)
        r_lo, e_lo = _two_sum(mid, -lo)
        # round the radius up only where a half-width was not exact
        rad = np.maximum(np.where(e_hi > 0.0, up(r_hi), r_hi), np.where(e_lo > 0.0, up(r_lo), r_lo))
        b = basis(degree)
        c = np.zeros((lo.size, b.size))
        c[:, 0] = mid
        if degree >= 1:
            for i in range(lo.size):
                e = [0] * N_SYMBOLS
                e[i] = 1
                c[i, b.index[tuple(e)]] = rad[i]
        elif np.any(rad > 0):
            # degree 0 cannot carry symbols: the box goes into the remainder
            return cls(c, -rad, rad, degree, h)
        z = np.zeros(lo.size)
        return cls(c, z, z, degree, h)

    # -- queries ----------------------------------------------------------
    def poly_range(self) -> tuple[np.ndarray, np.ndarray]:
        mlo, mhi = self.basis.ranges(self.h)
        return _range_terms(self.coeffs, mlo, mhi)

    def range(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.poly_range()
        return _add_endpoints(lo, hi, self.rem_lo, self.rem_hi)

    def evaluate(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Polynomial value at points ``z`` (shape (..., 4)) and a bound on the
        floating-point evaluation error. Returns arrays of shape (..., n)."""
        z = np.asarray(z, dtype=float)
        mons = np.prod(z[..., None, :] ** self.basis.exps, axis=-1)
        val = mons @ self.coeffs.T
        err = gamma(self.basis.size + 2 * self.degree + 2) * (np.abs(mons) @ np.abs(self.coeffs).T)
        return val, up(err)

    def contains(self, z, values) -> np.ndarray:
        """Pointwise containment of ``values`` (shape (..., n)) at ``z``."""
        val, err = self.evaluate(z)
        return (values >= val + self.rem_lo - err) & (values <= val + self.rem_hi + err)

    def check_compatible(self, other: "TMVector"):
        if self.degree != other.degree or self.h != other.h:
            raise DomainMismatch(
                f"degree/domain mismatch: ({self.degree}, h={self.h}) vs ({other.degree}, h={other.h})"
            )


def _spill(full: np.ndarray, keep: int, full_basis: MonomialBasis, h: float):
    """Split coefficients (over ``full_basis``) into kept prefix and the
    interval range of the dropped high-order part."""
    kept = full[:, :keep]
    hi_part = full[:, keep:]
    if hi_part.shape[1] == 0 or not np.any(hi_part):
        z = np.zeros(full.shape[0])
        return kept, z, z
    mlo, mhi = full_basis.ranges(h)
    lo, hi = _range_terms(hi_part, mlo[keep:], mhi[keep:])
    return kept, lo, hi


def _two_sum(a, b):
    """Sum and its exact rounding error (Knuth)."""
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _add_endpoints(alo, ahi, blo, bhi):
    slo, elo = _two_sum(alo, blo)
    shi, ehi = _two_sum(ahi, bhi)
    return np.where(elo < 0.0, down(slo), slo), np.where(ehi > 0.0, up(shi), shi)


def _absorb_exact(lo, hi, err):
    """Widen by ``err`` only where it is nonzero."""
    wlo, whi = _widen(lo, hi, err)
    return np.where(err > 0.0, wlo, lo), np.where(err > 0.0, whi, hi)


def tmv_add(a: TMVector, b: TMVector) -> TMVector:
    a.check_compatible(b)
    c, ec = _two_sum(a.coeffs, b.coeffs)
    err = np.abs(ec).sum(axis=1)
    err = np.where(err > 0.0, up(err * (1.0 + gamma(a.basis.size))), 0.0)
    lo, hi = _add_endpoints(a.rem_lo, a.rem_hi, b.rem_lo, b.rem_hi)
    lo, hi = _absorb_exact(lo, hi, err)
    return TMVector(c, lo, hi, a.degree, a.h)


def tmv_neg(a: TMVector) -> TMVector:
    return TMVector(-a.coeffs, -a.rem_hi, -a.rem_lo, a.degree, a.h)


def tmv_sub(a: TMVector, b: TMVector) -> TMVector:
    return tmv_add(a, tmv_neg(b))


def tmv_add_constant(a: TMVector, values) -> TMVector:
    values = np.broadcast_to(np.asarray(values, dtype=float), (a.n,))
    c = a.coeffs.copy()
    c[:, 0], e = _two_sum(c[:, 0], values)
    err = np.where(e != 0.0, up(np.abs(e)), 0.0)
    lo, hi = _absorb_exact(a.rem_lo, a.rem_hi, err)
    return TMVector(c, lo, hi, a.degree, a.h)


def tmv_scale(a: TMVector, s) -> TMVector:
    """Row-wise multiplication by exact real scalars ``s``."""
    s = np.broadcast_to(np.asarray(s, dtype=float), (a.n,))
    c = a.coeffs * s[:, None]
    mag = np.abs(c).sum(axis=1)
    err = np.where(mag > 0.0, up(_U * mag), 0.0)
    r1, r2 = a.rem_lo * s, a.rem_hi * s
    lo, hi = np.minimum(r1, r2), np.maximum(r1, r2)
    # products with a zero factor are exact
    inexact = (s != 0.0) & ((a.rem_lo != 0.0) | (a.rem_hi != 0.0))
    lo = np.where(inexact, down(lo), lo)
    hi = np.where(inexact, up(hi), hi)
    lo, hi = _absorb_exact(lo, hi, err)
    return TMVector(c, lo, hi, a.degree, a.h)


def tmv_scale_interval(a: TMVector, slo, shi) -> TMVector:
    """Row-wise multiplication by interval scalars [slo, shi]."""
    slo = np.broadcast_to(np.asarray(slo, dtype=float), (a.n,))
    shi = np.broadcast_to(np.asarray(shi, dtype=float), (a.n,))
    mid = 0.5 * (slo + shi)
    rad = up(np.maximum(shi - mid, mid - slo))
    out = tmv_scale(a, mid)
    if np.any(rad > 0):
        glo, ghi = a.range()
        mag = np.maximum(np.abs(glo), np.abs(ghi))
        extra = up(rad * mag)
        out = out.with_remainder(down(out.rem_lo - extra), up(out.rem_hi + extra))
    return out


def tmv_linear_combination(weights: np.ndarray, items: Sequence[TMVector]) -> TMVector:
    """Rows ``sum_k weights[r, k] * items[k]`` for single-row TMs ``items``."""
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    first = items[0]
    C = np.vstack([it.coeffs for it in items])
    rlo = np.concatenate([it.rem_lo for it in items])
    rhi = np.concatenate([it.rem_hi for it in items])
    c = W @ C
    err = up(gamma(len(items) + 1) * (np.abs(W) @ np.abs(C)).sum(axis=1))
    Wp, Wn = np.maximum(W, 0.0), np.minimum(W, 0.0)
    lo = Wp @ rlo + Wn @ rhi
    hi = Wp @ rhi + Wn @ rlo
    rerr = up(gamma(len(items) + 1) * (np.abs(W) @ np.maximum(np.abs(rlo), np.abs(rhi))))
    lo, hi = _widen(lo, hi, err + rerr)
    return TMVector(c, lo, hi, first.degree, first.h)


def tmv_truncate(a: TMVector, degree: int) -> TMVector:
    """Re-express ``a`` at a lower degree, spilling dropped terms."""
    if degree >= a.degree:
        if degree == a.degree:
            return a
        c = np.zeros((a.n, basis(degree).size))
        c[:, : a.coeffs.shape[1]] = a.coeffs
        return TMVector(c, a.rem_lo, a.rem_hi, degree, a.h)
    keep = basis(degree).size
    kept, slo, shi = _spill(a.coeffs, keep, a.basis, a.h)
    lo, hi = down(a.rem_lo + slo), up(a.rem_hi + shi)
    return TMVector(kept, lo, hi, degree, a.h)


def tmv_mul(a: TMVector, b: TMVector, max_degree: int | None = None) -> TMVector:
    """Row-wise product, truncated to ``max_degree`` (default: the inputs')."""
    a.check_compatible(b)
    if a.n != b.n:
        if a.n == 1:
            a = a[np.zeros(b.n, dtype=int)]
        elif b.n == 1:
            b = b[np.zeros(a.n, dtype=int)]
        else:
            raise ValueError("row counts differ")
    D = a.degree
    max_degree = D if max_degree is None else max_degree
    if max_degree > D:
        raise ValueError("max_degree cannot exceed the operand degree")
    M = a.basis.size
    outer, ok = _products_exact(a.coeffs[:, :, None], b.coeffs[:, None, :])
    outer = outer.reshape(a.n, M * M)
    S = _product_map(D)
    full = outer @ S
    err = up(gamma(M + 2) * np.abs(outer).sum(axis=1))
    # exact products whose sums cannot round need no widening
    err = np.where(ok.reshape(a.n, -1).all(axis=1) & _sums_exact(outer), 0.0, err)
    keep = basis(max_degree).size
    kept, slo, shi = _spill(full, keep, basis(2 * D), a.h)

    palo, pahi = a.poly_range()
    pblo, pbhi = b.poly_range()
    # remainder = spill + pa*Rb + Ra*pb + Ra*Rb
    x1 = _imul(palo, pahi, b.rem_lo, b.rem_hi)
    x2 = _imul(a.rem_lo, a.rem_hi, pblo, pbhi)
    x3 = _imul(a.rem_lo, a.rem_hi, b.rem_lo, b.rem_hi)
    lo = slo + x1[0] + x2[0] + x3[0]
    hi = shi + x1[1] + x2[1] + x3[1]
    mag = np.abs(slo) + np.abs(shi) + np.abs(x1[0]) + np.abs(x1[1]) + np.abs(x2[0]) + np.abs(x2[1]) + np.abs(x3[0]) + np.abs(x3[1])
    # with zero remainders the cross terms vanish and the sum is just the spill
    no_rem = (a.rem_lo == 0.0) & (a.rem_hi == 0.0) & (b.rem_lo == 0.0) & (b.rem_hi == 0.0)
    err = np.where(no_rem, err, up(err + gamma(4) * mag))
    lo, hi = _absorb_exact(lo, hi, err)
    return TMVector(kept, lo, hi, max_degree, a.h)


def _imul(alo, ahi, blo, bhi):
    p = np.stack([alo * blo, alo * bhi, ahi * blo, ahi * bhi])
    return p.min(axis=0), p.max(axis=0)


def tmv_integrate_time(a: TMVector) -> TMVector:
    """Antiderivative in t from 0; remainder scaled by [0, h]."""
    D = a.degree
    target, factor = _integration_map(D)
    b1 = basis(D + 1)
    full = np.zeros((a.n, b1.size))
    full[:, target] = a.coeffs * factor
    # 1/k is exact for k in {1, 2, 4}; elsewhere both the factor and the
    # product are rounded
    inexact = ~np.isin(factor, (1.0, 0.5, 0.25, 0.125))
    err = up(gamma(2) * (np.abs(a.coeffs * factor) * inexact).sum(axis=1))
    kept, slo, shi = _spill(full, a.basis.size, b1, a.h)
    h = a.h
    rlo = np.minimum(0.0, a.rem_lo * h)
    rhi = np.maximum(0.0, a.rem_hi * h)
    rlo = np.where(rlo < 0.0, down(rlo), rlo)
    rhi = np.where(rhi > 0.0, up(rhi), rhi)
    lo, hi = _add_endpoints(rlo, rhi, slo, shi)
    lo, hi = _absorb_exact(lo, hi, err)
    return TMVector(kept, lo, hi, D, h)


def tmv_eval_time(a: TMVector, tv: float | None = None) -> TMVector:
    """Substitute t = tv (default h); the result no longer depends on t."""
    tv = a.h if tv is None else float(tv)
    if not 0.0 <= tv <= a.h:
        raise ValueError("time value outside [0, h]")
    E, Eabs = _time_substitution(a.degree, tv)
    c = a.coeffs @ E
    err = up(gamma(2 * a.degree + a.basis.size + 2) * (np.abs(a.coeffs) @ Eabs).sum(axis=1))
    # rows without time terms pass through unchanged
    has_t = np.any(a.coeffs[:, a.basis.time_power > 0] != 0.0, axis=1)
    err = np.where(has_t, err, 0.0)
    lo, hi = _absorb_exact(a.rem_lo, a.rem_hi, err)
    return TMVector(c, lo, hi, a.degree, a.h)


def tmv_compose(u: np.ndarray, a: TMVector, max_degree: int | None = None) -> TMVector:
    """Row-wise ``u_r(a_r)`` for univariate polynomials ``u`` given as
    ascending coefficient rows of shape (n, K+1); Horner's scheme."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if u.shape[0] == 1 and a.n > 1:
        u = np.repeat(u, a.n, axis=0)
    if u.shape[0] != a.n:
        raise ValueError("one univariate polynomial per row is required")
    degree = a.degree if max_degree is None else max_degree
    K = u.shape[1] - 1
    src = tmv_truncate(a, degree) if degree < a.degree else a
    acc = TMVector.constant(u[:, K], degree, a.h)
    for k in range(K - 1, -1, -1):
        acc = tmv_add_constant(tmv_mul(acc, src, degree), u[:, k])
    return acc


# ---------------------------------------------------------------------------
# scalar API


@dataclass(frozen=True)
class Polynomial:
    """Dense polynomial in (x, y, theta, t) with total degree <= ``degree``."""

    coeffs: np.ndarray
    degree: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).ravel()
        if c.size != basis(self.degree).size:
            raise ValueError("coefficient count does not match degree")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, ...], float], degree: int) -> "Polynomial":
        b = basis(degree)
        c = np.zeros(b.size)
        for e, v in terms.items():
            e = tuple(e) + (0,) * (N_SYMBOLS - len(e))
            if sum(e) > degree:
                raise ValueError(f"term {e} exceeds degree {degree}")
            c[b.index[e]] += v
        return cls(c, degree)

    @classmethod
    def constant(cls, value: float, degree: int) -> "Polynomial":
        return cls.from_terms({(0, 0, 0, 0): value}, degree)

    @property
    def terms(self) -> dict[tuple[int, ...], float]:
        b = basis(self.degree)
        return {tuple(int(k) for k in b.exps[i]): float(v) for i, v in enumerate(self.coeffs) if v != 0.0}

    def __call__(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(np.prod(z ** basis(self.degree).exps, axis=-1) @ self.coeffs)


def symbol(name: str, degree: int) -> Polynomial:
    e = [0] * N_SYMBOLS
    e[SYMBOLS.index(name)] = 1
    return Polynomial.from_terms({tuple(e): 1.0}, degree)


@dataclass(frozen=True)
class TaylorModel:
    poly: Polynomial
    remainder: Interval = field(default_factory=lambda: Interval(0.0, 0.0))
    h: float = 0.0

    @property
    def degree(self) -> int:
        return self.poly.degree

    @property
    def domain(self) -> list[Interval]:
        return [Interval(-1.0, 1.0)] * TIME + [Interval(0.0, self.h)]

    def to_vector(self) -> TMVector:
        return TMVector(self.poly.coeffs[None, :], [self.remainder.lo], [self.remainder.hi], self.degree, self.h)

    @classmethod
    def from_vector(cls, v: TMVector, row: int = 0) -> "TaylorModel":
        return cls(Polynomial(v.coeffs[row], v.degree), Interval(v.rem_lo[row], v.rem_hi[row]), v.h)

    def __add__(self, other: "TaylorModel") -> "TaylorModel":
        return tm_add(self, other)


def tm_add(a: TaylorModel, b: TaylorModel) -> TaylorModel:
    return TaylorModel.from_vector(tmv_add(a.to_vector(), b.to_vector()))


def tm_mul(a: TaylorModel, b: TaylorModel, max_degree: int | None = None) -> TaylorModel:
    return TaylorModel.from_vector(tmv_mul(a.to_vector(), b.to_vector(), max_degree))


def tm_range(a: TaylorModel) -> Interval:
    lo, hi = a.to_vector().range()
    return Interval(lo[0], hi[0])


def tm_integrate_time(a: TaylorModel, h: float | None = None) -> TaylorModel:
    if h is not None and h != a.h:
        raise DomainMismatch(f"model is defined on [0, {a.h}], not [0, {h}]")
    return TaylorModel.from_vector(tmv_integrate_time(a.to_vector()))


def tm_compose_poly(u, a: TaylorModel, max_degree: int | None = None) -> TaylorModel:
    """``u(a)`` for a univariate polynomial ``u`` (ascending coefficients or a
    ``numpy.polynomial.Polynomial``)."""
    coef = getattr(u, "coef", u)
    return TaylorModel.from_vector(tmv_compose(np.asarray(coef, dtype=float)[None, :], a.to_vector(), max_degree))
