"""Compiled flowpipe kernel for one control period.

Mirrors the reference Taylor-model arithmetic in ``taylor`` and
``flowpipe.picard_flow_step`` row by row, without per-operation Python
overhead. All tables describing the monomial basis are built once per
(degree, step) in :func:`tables` and passed in as arrays.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numba import njit

from .taylor import _integration_map, basis

_U = 2.0 ** -53
_INF = np.inf

OK = 0
CONTRACTION_FAILED = 1


@lru_cache(maxsize=64)
def tables(degree: int, h: float):
    """Index and range tables for the kernel at ``degree`` on ``t in [0, h]``."""
    b, b2 = basis(degree), basis(2 * degree)
    M = b.size
    pk = np.empty((M, M), dtype=np.int64)
    for i, ei in enumerate(b.exps):
        for j, ej in enumerate(b.exps):
            pk[i, j] = b2.index[tuple(ei + ej)]
    mlo, mhi = b2.ranges(h)
    tgt, fac = _integration_map(degree)
    inexact = ~np.isin(fac, (1.0, 0.5, 0.25, 0.125))
    m1 = basis(degree + 1).size
    tsub = np.empty(M, dtype=np.int64)
    tpow = np.empty(M)
    for i, e in enumerate(b.exps):
        e0 = e.copy()
        e0[3] = 0
        tsub[i] = b.index[tuple(e0)]
        tpow[i] = h ** int(e[3])
    return pk, mlo.copy(), mhi.copy(), tgt, fac, inexact, m1, tsub, tpow


@njit(cache=True)
def _up(x):
    return np.nextafter(x, _INF)


@njit(cache=True)
def _dn(x):
    return np.nextafter(x, -_INF)


@njit(cache=True)
def _gamma(n):
    nu = (n + 2) * _U
    return _up(nu / (1.0 - nu))


@njit(cache=True)
def _range(c, start, stop, mlo, mhi):
    """Enclosure of sum_{i in [start, stop)} c[i] * m_i."""
    lo = 0.0
    hi = 0.0
    mag = 0.0
    nz = False
    for i in range(start, stop):
        ci = c[i]
        if ci == 0.0:
            continue
        nz = True
        a = ci * mlo[i]
        b = ci * mhi[i]
        if a <= b:
            lo += a
            hi += b
        else:
            lo += b
            hi += a
        mag += max(abs(a), abs(b))
    if not nz:
        return 0.0, 0.0
    e = _up(_gamma(stop - start + 1) * mag)
    return _dn(lo - e), _up(hi + e)


@njit(cache=True)
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(cache=True)
def _add_iv(alo, ahi, blo, bhi):
    lo, el = _two_sum(alo, blo)
    hi, eh = _two_sum(ahi, bhi)
    if el < 0.0:
        lo = _dn(lo)
    if eh > 0.0:
        hi = _up(hi)
    return lo, hi


@njit(cache=True)
def _widen_if(lo, hi, err):
    if err > 0.0:
        return _dn(lo - err), _up(hi + err)
    return lo, hi


@njit(cache=True)
def _imul(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    return min(min(p1, p2), min(p3, p4)), max(max(p1, p2), max(p3, p4))


@njit(cache=True)
def _mul(a, alo, ahi, b, blo, bhi, pk, mlo, mhi, M, M2):
    """Product of two rows truncated to the input degree."""
    full = np.zeros(M2)
    s = 0.0
    for i in range(M):
        ai = a[i]
        if ai == 0.0:
            continue
        for j in range(M):
            p = ai * b[j]
            full[pk[i, j]] += p
            s += abs(p)
    err = _up(_gamma(M + 2) * s * (1.0 + _gamma(M * M)))
    slo, shi = _range(full, M, M2, mlo, mhi)
    palo, pahi = _range(a, 0, M, mlo, mhi)
    pblo, pbhi = _range(b, 0, M, mlo, mhi)
    x1lo, x1hi = _imul(palo, pahi, blo, bhi)
    x2lo, x2hi = _imul(alo, ahi, pblo, pbhi)
    x3lo, x3hi = _imul(alo, ahi, blo, bhi)
    lo = slo + x1lo + x2lo + x3lo
    hi = shi + x1hi + x2hi + x3hi
    mag = abs(slo) + abs(shi) + abs(x1lo) + abs(x1hi) + abs(x2lo) + abs(x2hi) + abs(x3lo) + abs(x3hi)
    e = _up(err + _gamma(4) * mag)
    return full[:M].copy(), _dn(lo - e), _up(hi + e)


@njit(cache=True)
def _vector_field(X, Xlo, Xhi, v0, v1, w0, w1, pk, mlo, mhi, M, M2, D):
    F = np.zeros((3, M))
    Flo = np.zeros(3)
    Fhi = np.zeros(3)
    tlo, thi = _range(X[2], 0, M, mlo, mhi)
    tlo, thi = _add_iv(tlo, thi, Xlo[2], Xhi[2])
    thm = 0.5 * (tlo + thi)
    # dev = theta - thm
    dev = X[2].copy()
    c0, e = _two_sum(dev[0], -thm)
    dev[0] = c0
    dlo, dhi = Xlo[2], Xhi[2]
    if e != 0.0:
        dlo, dhi = _widen_if(dlo, dhi, _up(abs(e)))
    rlo, rhi = _range(dev, 0, M, mlo, mhi)
    rlo, rhi = _add_iv(rlo, rhi, dlo, dhi)
    rdev = _up(max(abs(rlo), abs(rhi)))

    P = np.zeros((D + 1, M))
    Plo = np.zeros(D + 1)
    Phi = np.zeros(D + 1)
    P[0, 0] = 1.0
    if D >= 1:
        P[1] = dev
        Plo[1] = dlo
        Phi[1] = dhi
    for k in range(2, D + 1):
        row, l, u = _mul(P[k - 1], Plo[k - 1], Phi[k - 1], dev, dlo, dhi, pk, mlo, mhi, M, M2)
        P[k] = row
        Plo[k] = l
        Phi[k] = u

    c = math.cos(thm)
    s = math.sin(thm)
    A = np.empty((2, D + 1))
    f = 1.0
    for k in range(D + 1):
        if k > 0:
            f *= k
        r = k % 4
        if r == 0:
            A[0, k] = c / f
            A[1, k] = s / f
        elif r == 1:
            A[0, k] = -s / f
            A[1, k] = c / f
        elif r == 2:
            A[0, k] = -c / f
            A[1, k] = -s / f
        else:
            A[0, k] = s / f
            A[1, k] = -c / f

    coef_err = 0.0
    pw = 1.0
    for k in range(D + 1):
        coef_err = _up(coef_err + _up(2.0 ** -52 * pw))
        pw = _up(pw * rdev)
    # pw is now rdev^(D+1)
    fact = 1.0
    for k in range(1, D + 2):
        fact *= k
    lag = _up(_up(pw / fact) * (1.0 + 2.0 ** -50))
    extra = _up(coef_err + lag)
    g = _gamma(D + 2)

    vm = 0.5 * (v0 + v1)
    vr = _up(max(v1 - vm, vm - v0))
    for r in range(2):
        # linear combination sum_k A[r, k] * P_k
        row = np.zeros(M)
        aerr = 0.0
        lo = 0.0
        hi = 0.0
        rmag = 0.0
        for k in range(D + 1):
            a = A[r, k]
            for i in range(M):
                row[i] += a * P[k, i]
                aerr += abs(a) * abs(P[k, i])
            if a >= 0.0:
                lo += a * Plo[k]
                hi += a * Phi[k]
            else:
                lo += a * Phi[k]
                hi += a * Plo[k]
            rmag += abs(a) * max(abs(Plo[k]), abs(Phi[k]))
        e = _up(g * aerr + g * rmag)
        lo = _dn(lo - e - extra)
        hi = _up(hi + e + extra)
        # multiply by [v0, v1]: midpoint exactly-rounded part plus radius * |range|
        sm = 0.0
        for i in range(M):
            F[r, i] = row[i] * vm
            sm += abs(F[r, i])
        serr = _up(_U * sm * (1.0 + _gamma(M))) if sm > 0.0 else 0.0
        r1 = lo * vm
        r2 = hi * vm
        flo = min(r1, r2)
        fhi = max(r1, r2)
        if vm != 0.0 and (lo != 0.0 or hi != 0.0):
            flo = _dn(flo)
            fhi = _up(fhi)
        flo, fhi = _widen_if(flo, fhi, serr)
        if vr > 0.0:
            plo, phi = _range(row, 0, M, mlo, mhi)
            glo, ghi = _add_iv(plo, phi, lo, hi)
            ext = _up(vr * max(abs(glo), abs(ghi)))
            flo = _dn(flo - ext)
            fhi = _up(fhi + ext)
        Flo[r] = flo
        Fhi[r] = fhi

    wm = 0.5 * (w0 + w1)
    wr = _up(max(w1 - wm, wm - w0))
    F[2, 0] = wm
    Flo[2] = -wr
    Fhi[2] = wr
    return F, Flo, Fhi


@njit(cache=True)
def _integrate(F, Flo, Fhi, tgt, fac, inexact, mlo, mhi, M, M1, h):
    n = F.shape[0]
    G = np.zeros((n, M))
    Glo = np.zeros(n)
    Ghi = np.zeros(n)
    full = np.zeros(M1)
    for r in range(n):
        full[:] = 0.0
        err = 0.0
        for i in range(M):
            p = F[r, i] * fac[i]
            full[tgt[i]] = p
            if inexact[i]:
                err += abs(p)
        if err > 0.0:
            err = _up(_gamma(2) * err)
        slo, shi = _range(full, M, M1, mlo, mhi)
        rlo = min(0.0, Flo[r] * h)
        rhi = max(0.0, Fhi[r] * h)
        if rlo < 0.0:
            rlo = _dn(rlo)
        if rhi > 0.0:
            rhi = _up(rhi)
        lo, hi = _add_iv(rlo, rhi, slo, shi)
        Glo[r], Ghi[r] = _widen_if(lo, hi, err)
        G[r] = full[:M]
    return G, Glo, Ghi


@njit(cache=True)
def _add(A, Alo, Ahi, B, Blo, Bhi, M):
    n = A.shape[0]
    C = np.empty((n, M))
    lo = np.empty(n)
    hi = np.empty(n)
    gm = _gamma(M)
    for r in range(n):
        err = 0.0
        for i in range(M):
            s, e = _two_sum(A[r, i], B[r, i])
            C[r, i] = s
            err += abs(e)
        l, u = _add_iv(Alo[r], Ahi[r], Blo[r], Bhi[r])
        if err > 0.0:
            l, u = _widen_if(l, u, _up(err * (1.0 + gm)))
        lo[r] = l
        hi[r] = u
    return C, lo, hi


@njit(cache=True)
def _picard(X, Xlo, Xhi, X0, X0lo, X0hi, v0, v1, w0, w1, tb, h, M, M1, M2, D):
    pk, mlo, mhi, tgt, fac, inexact = tb
    F, Flo, Fhi = _vector_field(X, Xlo, Xhi, v0, v1, w0, w1, pk, mlo, mhi, M, M2, D)
    G, Glo, Ghi = _integrate(F, Flo, Fhi, tgt, fac, inexact, mlo, mhi, M, M1, h)
    return _add(X0, X0lo, X0hi, G, Glo, Ghi, M)


@njit(cache=True)
def _phi(p, jlo, jhi, X0, X0lo, X0hi, v0, v1, w0, w1, tb, h, M, M1, M2, D):
    Y, Ylo, Yhi = _picard(p, jlo, jhi, X0, X0lo, X0hi, v0, v1, w0, w1, tb, h, M, M1, M2, D)
    mlo, mhi = tb[1], tb[2]
    z = np.zeros(3)
    Dc, Dlo, Dhi = _add(Y, z, z, -p, z, z, M)
    nlo = np.empty(3)
    nhi = np.empty(3)
    for r in range(3):
        plo, phi = _range(Dc[r], 0, M, mlo, mhi)
        plo, phi = _add_iv(plo, phi, Dlo[r], Dhi[r])
        nlo[r], nhi[r] = _add_iv(Ylo[r], Yhi[r], plo, phi)
    return nlo, nhi


@njit(cache=True)
def _step(X0, X0lo, X0hi, v0, v1, w0, w1, tb, h, M, M1, M2, D, iters, max_infl):
    z = np.zeros(3)
    vm = 0.5 * (v0 + v1)
    wm = 0.5 * (w0 + w1)
    p = X0.copy()
    for _ in range(iters):
        p, _lo, _hi = _picard(p, z, z, X0, z, z, vm, vm, wm, wm, tb, h, M, M1, M2, D)
    jlo, jhi = _phi(p, z, z, X0, X0lo, X0hi, v0, v1, w0, w1, tb, h, M, M1, M2, D)
    jlo, jhi = _phi(p, jlo, jhi, X0, X0lo, X0hi, v0, v1, w0, w1, tb, h, M, M1, M2, D)
    for r in range(3):
        pad = 0.1 * (jhi[r] - jlo[r]) + 1e-15
        jlo[r] = _dn(jlo[r] - pad)
        jhi[r] = _up(jhi[r] + pad)
    for _ in range(max_infl + 1):
        nlo, nhi = _phi(p, jlo, jhi, X0, X0lo, X0hi, v0, v1, w0, w1, tb, h, M, M1, M2, D)
        ok = True
        for r in range(3):
            if nlo[r] < jlo[r] or nhi[r] > jhi[r]:
                ok = False
        if ok:
            return p, nlo, nhi, True
        for r in range(3):
            lo = min(jlo[r], nlo[r])
            hi = max(jhi[r], nhi[r])
            mid = 0.5 * (lo + hi)
            rad = max(hi - mid, mid - lo)
            jlo[r] = _dn(mid - 2.0 * rad - 1e-15)
            jhi[r] = _up(mid + 2.0 * rad + 1e-15)
    return p, jlo, jhi, False


@njit(cache=True)
def _eval_time(C, lo, hi, tsub, tpow, M, D):
    n = C.shape[0]
    out = np.zeros((n, M))
    olo = np.empty(n)
    ohi = np.empty(n)
    g = _gamma(2 * D + M + 2)
    for r in range(n):
        err = 0.0
        has_t = False
        for i in range(M):
            p = C[r, i] * tpow[i]
            out[r, tsub[i]] += p
            err += abs(C[r, i]) * abs(tpow[i])
            if tsub[i] != i and C[r, i] != 0.0:
                has_t = True
        if has_t:
            olo[r], ohi[r] = _widen_if(lo[r], hi[r], _up(g * err))
        else:
            olo[r] = lo[r]
            ohi[r] = hi[r]
    return out, olo, ohi


@njit(cache=True)
def flow_period(C0, lo0, hi0, v0, v1, w0, w1, h, substeps, iters, max_infl,
                pk, mlo, mhi, tgt, fac, inexact, M1, tsub, tpow, D):
    """Chain ``substeps`` certified Picard steps.

    Returns per-substep coefficients and remainders, per-substep range
    boxes, the range box of the state at the end of the period and a
    status code (OK, or CONTRACTION_FAILED with the failing substep).
    """
    M = C0.shape[1]
    M2 = mlo.shape[0]
    tb = (pk, mlo, mhi, tgt, fac, inexact)
    seg_c = np.zeros((substeps, 3, M))
    seg_lo = np.zeros((substeps, 3))
    seg_hi = np.zeros((substeps, 3))
    box_lo = np.zeros((substeps, 3))
    box_hi = np.zeros((substeps, 3))
    end_lo = np.zeros(3)
    end_hi = np.zeros(3)
    X = C0.copy()
    Xlo = lo0.copy()
    Xhi = hi0.copy()
    for k in range(substeps):
        p, rlo, rhi, ok = _step(X, Xlo, Xhi, v0, v1, w0, w1, tb, h, M, M1, M2, D, iters, max_infl)
        if not ok:
            return seg_c, seg_lo, seg_hi, box_lo, box_hi, end_lo, end_hi, CONTRACTION_FAILED, k
        seg_c[k] = p
        seg_lo[k] = rlo
        seg_hi[k] = rhi
        for r in range(3):
            plo, phi = _range(p[r], 0, M, mlo, mhi)
            box_lo[k, r], box_hi[k, r] = _add_iv(plo, phi, rlo[r], rhi[r])
        X, Xlo, Xhi = _eval_time(p, rlo, rhi, tsub, tpow, M, D)
    for r in range(3):
        plo, phi = _range(X[r], 0, M, mlo, mhi)
        end_lo[r], end_hi[r] = _add_iv(plo, phi, Xlo[r], Xhi[r])
    return seg_c, seg_lo, seg_hi, box_lo, box_hi, end_lo, end_hi, OK, substeps
