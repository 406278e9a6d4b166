"""Bernstein-polynomial enclosures of ReLU on an interval.

The interpolant is expanded into the power basis in ``y``. Its uniform error
against ReLU is certified on a dense grid: between neighbouring grid points
``|relu - p|`` can grow by at most ``(1 + L_p) * gap / 2``, where ``L_p``
bounds ``|p'|`` via the Bernstein derivative coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
from numpy.polynomial import Polynomial as UPoly

from .interval import Interval, down, gamma, up

GRID_SIZE = 1024
DEGENERATE_WIDTH = 1e-9
_QUANTUM = 2.0 ** -44


@dataclass(frozen=True)
class ActivationEnclosure:
    poly: UPoly
    error_bound: Interval
    source_interval: Interval
    order: int

    def __call__(self, y):
        return self.poly(y)


@lru_cache(maxsize=None)
def _bernstein_to_power(order: int) -> np.ndarray:
    """A[j, k]: coefficient of s^j contributed by node value f_k."""
    n = order
    A = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        for j in range(k, n + 1):
            A[j, k] = comb(n, k) * comb(n - k, j - k) * (-1) ** (j - k)
    return A


@lru_cache(maxsize=None)
def _binomials(order: int) -> np.ndarray:
    B = np.zeros((order + 1, order + 1))
    for j in range(order + 1):
        for i in range(j + 1):
            B[j, i] = comb(j, i)
    return B


def relu_enclosures(lo, hi, order: int, with_slopes: bool = False):
    """Vectorised ReLU enclosures.

    Returns ``(coeffs, err)`` where ``coeffs[r]`` holds ascending power-basis
    coefficients in ``y`` and ``err[r] >= max |relu(y) - p_r(y)|`` over
    ``[lo[r], hi[r]]``. With ``with_slopes`` also returns ``(dlo, dhi)``
    enclosing ``p_r'`` on the same interval.
    """
    if order < 1:
        raise ValueError("Bernstein order must be >= 1")
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if np.any(lo > hi):
        raise ValueError("inverted interval")
    n = lo.size
    coeffs = np.zeros((n, order + 1))
    err = np.zeros(n)
    dlo = np.zeros(n)
    dhi = np.zeros(n)

    pos = lo >= 0.0
    coeffs[pos, 1] = 1.0
    dlo[pos] = dhi[pos] = 1.0
    neg = hi <= 0.0
    mixed = ~(pos | neg)
    width = hi - lo
    tiny = mixed & (width < DEGENERATE_WIDTH)
    if np.any(tiny):
        mid = 0.5 * (lo[tiny] + hi[tiny])
        c = np.maximum(mid, 0.0)
        coeffs[tiny, 0] = c
        err[tiny] = up(np.maximum(np.abs(np.maximum(hi[tiny], 0.0) - c), np.abs(c)))
    work = mixed & ~tiny
    if np.any(work):
        c, e, sl, sh = _fit_mixed(lo[work], hi[work], order)
        coeffs[work] = c
        err[work] = e
        dlo[work] = sl
        dhi[work] = sh
    if with_slopes:
        return coeffs, err, dlo, dhi
    return coeffs, err


def _fit_mixed(lo: np.ndarray, hi: np.ndarray, order: int):
    n = order
    w = hi - lo
    nodes = lo[:, None] + w[:, None] * (np.arange(n + 1) / n)
    f = np.maximum(nodes, 0.0)
    f[:, 0] = 0.0
    f[:, -1] = hi
    # power basis in s = (y - lo) / w, then in y via s = alpha + beta * y
    A = _bernstein_to_power(n)
    b = f @ A.T
    beta = 1.0 / w
    alpha = -lo * beta
    B = _binomials(n)
    j = np.arange(n + 1)
    # apow[r, j - i] = alpha^(j-i); bpow[r, i] = beta^i
    apow = alpha[:, None] ** j
    bpow = beta[:, None] ** j
    # c_i = sum_j b_j C(j,i) alpha^(j-i) beta^i
    terms = b[:, :, None] * B[None, :, :] * _shift_powers(apow, n) * bpow[:, None, :]
    c = terms.sum(axis=1)
    conv_err = up(gamma(4 * n + 8) * np.abs(terms).sum(axis=1))

    # derivative bound: p' = n/w * sum (f_{k+1} - f_k) B_{k,n-1}(s)
    df = np.diff(f, axis=1) * (n / w)[:, None]
    R = np.maximum(np.abs(lo), np.abs(hi))
    rp = R[:, None] ** np.arange(n + 1)
    dslack = up(gamma(4) * np.abs(df).max(axis=1) + (conv_err[:, 1:] * np.arange(1, n + 1) * rp[:, :-1]).sum(axis=1))
    slo = down(df.min(axis=1) - dslack)
    shi = up(df.max(axis=1) + dslack)
    lp = np.maximum(np.abs(slo), np.abs(shi))

    grid = lo[:, None] + w[:, None] * np.linspace(0.0, 1.0, GRID_SIZE)
    grid[:, 0] = lo
    grid[:, -1] = hi
    grid = np.clip(grid, lo[:, None], hi[:, None])
    gap = up(np.diff(grid, axis=1).max(axis=1))
    pv = np.zeros_like(grid)
    for k in range(n, -1, -1):
        pv = pv * grid + c[:, k : k + 1]
    diff = np.abs(np.maximum(grid, 0.0) - pv).max(axis=1)
    # rounding in Horner evaluation plus coefficient conversion error
    eval_err = gamma(2 * n + 4) * (np.abs(c) * rp).sum(axis=1) + (conv_err * rp).sum(axis=1)
    E = up(up(diff + eval_err) + up((1.0 + lp) * gap * 0.5))
    # round up onto a coarse grid so float noise cannot reorder equal bounds
    return c, np.ceil(E / _QUANTUM) * _QUANTUM, slo, shi


def _shift_powers(apow: np.ndarray, n: int) -> np.ndarray:
    """P[r, j, i] = alpha_r^(j - i) for i <= j, else 0."""
    j = np.arange(n + 1)
    diff = j[:, None] - j[None, :]
    P = np.where(diff >= 0, apow[:, np.clip(diff, 0, n)], 0.0)
    return P


def bernstein_enclose_relu(range_: Interval, order: int) -> ActivationEnclosure:
    """ReLU enclosure ``relu(y) in poly(y) + error_bound`` on ``range_``."""
    if order < 1:
        raise ValueError("Bernstein order must be >= 1")
    if not isinstance(range_, Interval):
        range_ = Interval(*range_)
    coeffs, err = relu_enclosures([range_.lo], [range_.hi], order)
    c = coeffs[0]
    last = int(np.max(np.nonzero(c)[0])) if np.any(c) else 0
    return ActivationEnclosure(
        poly=UPoly(c[: last + 1]),
        error_bound=Interval(-err[0], err[0]),
        source_interval=range_,
        order=order,
    )
