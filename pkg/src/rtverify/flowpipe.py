"""Taylor-model flowpipes for the unicycle ``x' = v cos(theta)``,
``y' = v sin(theta)``, ``theta' = omega`` under a control held constant
(as an interval pair) over each sampling period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .interval import Interval, down, up
from .taylor import (
    TMVector,
    basis,
    tmv_add,
    tmv_add_constant,
    tmv_eval_time,
    tmv_integrate_time,
    tmv_linear_combination,
    tmv_mul,
    tmv_scale_interval,
    tmv_sub,
    tmv_truncate,
)

V_CAP = 0.22
OMEGA_CAP = 2.84
MAX_INFLATIONS = 20


def wrap_to_pi(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float

    def wrapped(self) -> "Pose":
        return Pose(self.x, self.y, wrap_to_pi(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class ControlInput:
    v: float
    omega: float

    def __post_init__(self):
        if abs(self.v) > V_CAP + 1e-12 or abs(self.omega) > OMEGA_CAP + 1e-12:
            raise ValueError(f"control ({self.v}, {self.omega}) exceeds actuator limits")

    @classmethod
    def clamped(cls, v: float, omega: float) -> "ControlInput":
        return cls(min(max(v, -V_CAP), V_CAP), min(max(omega, -OMEGA_CAP), OMEGA_CAP))


class FlowpipeError(RuntimeError):
    """Remainder could not be certified (step too large for the enclosure)."""


@dataclass
class FlowSegment:
    """Enclosure over ``[t0, t1]``; ``coeffs``/``rem_*`` describe the Taylor
    model in local time ``t in [0, t1 - t0]``."""

    t0: float
    t1: float
    box_lo: np.ndarray
    box_hi: np.ndarray
    coeffs: np.ndarray
    rem_lo: np.ndarray
    rem_hi: np.ndarray
    degree: int
    h: float

    @classmethod
    def from_tm(cls, t0: float, t1: float, tm: TMVector) -> "FlowSegment":
        lo, hi = tm.range()
        return cls(t0, t1, lo, hi, tm.coeffs, tm.rem_lo, tm.rem_hi, tm.degree, tm.h)

    @property
    def tm(self) -> TMVector:
        return TMVector(self.coeffs, self.rem_lo, self.rem_hi, self.degree, self.h)

    @property
    def xy_box(self) -> tuple[float, float, float, float]:
        return (self.box_lo[0], self.box_hi[0], self.box_lo[1], self.box_hi[1])


@dataclass
class Flowpipe:
    segments: list[FlowSegment] = field(default_factory=list)

    @property
    def xy_boxes(self) -> list[tuple[float, float, float, float]]:
        return [s.xy_box for s in self.segments]

    def extend(self, segs: Sequence[FlowSegment], offset: float = 0.0):
        for s in segs:
            self.segments.append(
                FlowSegment(s.t0 + offset, s.t1 + offset, s.box_lo, s.box_hi, s.coeffs, s.rem_lo, s.rem_hi, s.degree, s.h)
            )


# -- oracles ---------------------------------------------------------------

def closed_form_unicycle(pose: Pose, control: ControlInput, t: float) -> Pose:
    v, w = control.v, control.omega
    th = pose.theta
    if abs(w) < 1e-9:
        return Pose(pose.x + v * t * math.cos(th), pose.y + v * t * math.sin(th), th + w * t)
    th1 = th + w * t
    return Pose(
        pose.x + (v / w) * (math.sin(th1) - math.sin(th)),
        pose.y - (v / w) * (math.cos(th1) - math.cos(th)),
        th1,
    )


def unicycle_rhs(s: np.ndarray, v, w) -> np.ndarray:
    return np.stack([v * np.cos(s[..., 2]), v * np.sin(s[..., 2]), np.broadcast_to(w, s[..., 2].shape)], axis=-1)


def rk4_trajectory(s0, v, w, t_end: float, dt: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
    """Classic RK4; ``s0`` may be a batch of states (..., 3). Returns the
    sample times and states with shape (steps + 1, ..., 3)."""
    s = np.array(s0, dtype=float)
    n = int(round(t_end / dt))
    out = np.empty((n + 1,) + s.shape)
    out[0] = s
    for i in range(n):
        k1 = unicycle_rhs(s, v, w)
        k2 = unicycle_rhs(s + 0.5 * dt * k1, v, w)
        k3 = unicycle_rhs(s + 0.5 * dt * k2, v, w)
        k4 = unicycle_rhs(s + dt * k3, v, w)
        s = s + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = s
    return np.arange(n + 1) * dt, out


# -- Taylor-model flow -----------------------------------------------------

def _trig_coefficients(thm: float, order: int) -> np.ndarray:
    """Rows: Taylor coefficients of cos and sin about ``thm``."""
    c, s = math.cos(thm), math.sin(thm)
    cos_d = (c, -s, -c, s)
    sin_d = (s, c, -s, -c)
    A = np.empty((2, order + 1))
    for k in range(order + 1):
        f = math.factorial(k)
        A[0, k] = cos_d[k % 4] / f
        A[1, k] = sin_d[k % 4] / f
    return A


def _stack(items: Sequence[TMVector]) -> TMVector:
    first = items[0]
    return TMVector(
        np.vstack([t.coeffs for t in items]),
        np.concatenate([t.rem_lo for t in items]),
        np.concatenate([t.rem_hi for t in items]),
        first.degree,
        first.h,
    )


def _vector_field(X: TMVector, v: tuple[float, float], w: tuple[float, float]) -> TMVector:
    D = X.degree
    theta = X[2]
    lo, hi = theta.range()
    thm = 0.5 * (lo[0] + hi[0])
    dev = tmv_add_constant(theta, -thm)
    dlo, dhi = dev.range()
    rdev = up(max(abs(dlo[0]), abs(dhi[0])))
    powers = [TMVector.constant([1.0], D, X.h), dev]
    for _ in range(2, D + 1):
        powers.append(tmv_mul(powers[-1], dev))
    powers = powers[: D + 1]
    A = _trig_coefficients(thm, D)
    cs = tmv_linear_combination(A, powers)
    # libm error in cos/sin(thm) (<= 1 ulp of a value in [-1, 1]) and the
    # Lagrange remainder |dev|^(D+1)/(D+1)!
    coef_err = sum(up(2.0 ** -52 * rdev ** k) for k in range(D + 1))
    lag = up(up(rdev ** (D + 1)) / math.factorial(D + 1) * (1.0 + 2.0 ** -50))
    extra = up(coef_err + lag)
    cs = cs.with_remainder(down(cs.rem_lo - extra), up(cs.rem_hi + extra))
    fxy = tmv_scale_interval(cs, v[0], v[1])
    wm = 0.5 * (w[0] + w[1])
    wr = up(max(w[1] - wm, wm - w[0]))
    fth = TMVector(np.zeros((1, basis(D).size)), [-wr], [wr], D, X.h)
    fth.coeffs[0, 0] = wm
    return _stack([fxy, fth])


def _picard(X: TMVector, X0: TMVector, v, w) -> TMVector:
    return tmv_add(X0, tmv_integrate_time(_vector_field(X, v, w)))


def _on_time_domain(state: TMVector, h: float, degree: int) -> TMVector:
    T = tmv_truncate(state, degree) if state.degree != degree else state
    if np.any(T.coeffs[:, T.basis.time_power > 0]):
        raise ValueError("initial set must not depend on the time symbol")
    return TMVector(T.coeffs, T.rem_lo, T.rem_hi, degree, h)


def _check_caps(control):
    v_iv, w_iv = control
    if max(abs(v_iv.lo), abs(v_iv.hi)) > V_CAP + 1e-12 or max(abs(w_iv.lo), abs(w_iv.hi)) > OMEGA_CAP + 1e-12:
        raise ValueError("control intervals exceed actuator limits")


def picard_flow_step(
    state: TMVector,
    control: tuple[Interval, Interval],
    h: float,
    tm_degree: int = 2,
    picard_iters: int = 3,
) -> TMVector:
    """Taylor model in (x, y, theta, t) valid for t in [0, h]."""
    if h <= 0.0:
        raise ValueError("step must be positive")
    _check_caps(control)
    v_iv, w_iv = control
    v = (v_iv.lo, v_iv.hi)
    w = (w_iv.lo, w_iv.hi)
    X0 = _on_time_domain(state, h, tm_degree)
    X0p = X0.poly_only()
    vm = 0.5 * (v[0] + v[1])
    wm = 0.5 * (w[0] + w[1])
    p = X0p
    for _ in range(picard_iters):
        p = _picard(p, X0p, (vm, vm), (wm, wm)).poly_only()

    def phi(jlo, jhi):
        Y = _picard(p.with_remainder(jlo, jhi), X0, v, w)
        dlo, dhi = tmv_sub(Y.poly_only(), p).range()
        return down(Y.rem_lo + dlo), up(Y.rem_hi + dhi)

    zero = np.zeros(3)
    jlo, jhi = phi(zero, zero)
    jlo, jhi = phi(jlo, jhi)
    pad = 0.1 * (jhi - jlo) + 1e-15
    jlo, jhi = down(jlo - pad), up(jhi + pad)
    for _ in range(MAX_INFLATIONS + 1):
        nlo, nhi = phi(jlo, jhi)
        if np.all(nlo >= jlo) and np.all(nhi <= jhi):
            # any image of a self-mapped remainder is itself valid
            return p.with_remainder(nlo, nhi)
        jlo = np.minimum(jlo, nlo)
        jhi = np.maximum(jhi, nhi)
        mid = 0.5 * (jlo + jhi)
        rad = np.maximum(jhi - mid, mid - jlo)
        jlo, jhi = down(mid - 2.0 * rad - 1e-15), up(mid + 2.0 * rad + 1e-15)
    raise FlowpipeError(f"remainder not certified after {MAX_INFLATIONS} inflations (h={h})")


def recenter(T: TMVector, degree: int | None = None) -> TMVector:
    """Re-parameterize onto fresh symbols: the range box as an affine model."""
    lo, hi = T.range()
    return TMVector.from_box(lo, hi, T.degree if degree is None else degree)


def flow_control_period(
    state: TMVector,
    control: tuple[Interval, Interval],
    delta: float = 0.2,
    substeps: int = 10,
    tm_degree: int = 2,
    picard_iters: int = 3,
    engine: str = "compiled",
) -> tuple[list[FlowSegment], TMVector]:
    """Chain ``substeps`` Picard steps over one control period.

    ``engine="reference"`` runs :func:`picard_flow_step` on ``TMVector``
    objects; ``"compiled"`` runs the same construction in a numba kernel.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    _check_caps(control)
    if tm_degree < 1:
        raise ValueError("tm_degree must be >= 1")
    h = delta / substeps
    edges = [delta * k / substeps for k in range(substeps + 1)]
    if engine == "reference":
        segs: list[FlowSegment] = []
        X = state
        for k in range(substeps):
            seg = picard_flow_step(X, control, h, tm_degree, picard_iters)
            segs.append(FlowSegment.from_tm(edges[k], edges[k + 1], seg))
            X = tmv_eval_time(seg, h)
        return segs, recenter(X, tm_degree)
    if engine != "compiled":
        raise ValueError(f"unknown engine {engine!r}")

    from . import _flowkernel as fk

    X0 = _on_time_domain(state, h, tm_degree)
    v_iv, w_iv = control
    pk, mlo, mhi, tgt, fac, inexact, m1, tsub, tpow = fk.tables(tm_degree, h)
    seg_c, seg_lo, seg_hi, box_lo, box_hi, end_lo, end_hi, status, k = fk.flow_period(
        X0.coeffs, X0.rem_lo, X0.rem_hi, v_iv.lo, v_iv.hi, w_iv.lo, w_iv.hi, h, substeps,
        picard_iters, MAX_INFLATIONS, pk, mlo, mhi, tgt, fac, inexact, m1, tsub, tpow, tm_degree,
    )
    if status != fk.OK:
        raise FlowpipeError(f"remainder not certified after {MAX_INFLATIONS} inflations (h={h}, substep {k})")
    segs = [
        FlowSegment(edges[i], edges[i + 1], box_lo[i], box_hi[i], seg_c[i], seg_lo[i], seg_hi[i], tm_degree, h)
        for i in range(substeps)
    ]
    return segs, TMVector.from_box(end_lo, end_hi, tm_degree)


def control_intervals(v, omega) -> tuple[Interval, Interval]:
    """Convenience: build the (v, omega) interval pair from pairs or floats."""
    def iv(a):
        if isinstance(a, Interval):
            return a
        if np.ndim(a) == 0:
            return Interval.point(float(a))
        return Interval(float(a[0]), float(a[1]))
    return iv(v), iv(omega)
