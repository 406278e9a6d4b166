import math

import numpy as np
import pytest

from _oracles import SOUNDNESS_SCENARIOS, closed_form_batch, flowpipe_violations
from rtverify.flowpipe import (
    ControlInput,
    FlowpipeError,
    Pose,
    closed_form_unicycle,
    control_intervals,
    flow_control_period,
    picard_flow_step,
    rk4_trajectory,
    wrap_to_pi,
)
from rtverify.taylor import TMVector, tmv_eval_time

ORIGIN = TMVector.from_box([0.0, 0.0, 0.0], [0.0, 0.0, 0.0], 2)


def end_contains(tm, point):
    lo, hi = tm.range()
    return bool(np.all(lo <= point) and np.all(point <= hi))


@pytest.mark.parametrize("engine", ["compiled", "reference"])
def test_straight_line_step(engine):
    step = picard_flow_step(ORIGIN, control_intervals(0.22, 0.0), 0.02)
    assert end_contains(tmv_eval_time(step, 0.02), [0.0044, 0.0, 0.0])
    segs, end = flow_control_period(ORIGIN, control_intervals(0.22, 0.0), 0.2, 10, engine=engine)
    assert end_contains(end, [0.044, 0.0, 0.0])
    assert segs[0].t0 == 0.0 and segs[-1].t1 == pytest.approx(0.2)


@pytest.mark.parametrize("engine", ["compiled", "reference"])
def test_zero_dynamics_is_a_fixed_point(engine):
    start = TMVector.from_box([1.0, 2.0, 0.5], [1.0, 2.0, 0.5], 2)
    segs, end = flow_control_period(start, control_intervals(0.0, 0.0), engine=engine)
    p = np.array([1.0, 2.0, 0.5])
    # the state never moves; only outward rounding may widen the boxes
    for lo, hi in [end.range()] + [(s.box_lo, s.box_hi) for s in segs]:
        assert np.all(lo <= p) and np.all(p <= hi)
        assert np.all(hi - lo <= 4e-14)


def test_quarter_arc_contains_closed_form():
    X = ORIGIN
    for _ in range(8):
        _, X = flow_control_period(X, control_intervals(0.22, 1.0), math.pi / 16, 10)
    assert end_contains(X, [0.22, 0.22, math.pi / 2])
    lo, hi = X.range()
    assert np.all(hi - lo < 1e-4)


def test_closed_form_examples():
    p = closed_form_unicycle(Pose(0, 0, 0), ControlInput(0.22, 0.0), 1.0)
    assert (p.x, p.y, p.theta) == pytest.approx((0.22, 0.0, 0.0), abs=1e-15)
    p = closed_form_unicycle(Pose(0, 0, 0), ControlInput(0.22, 1.0), math.pi / 2)
    assert (p.x, p.y, p.theta) == pytest.approx((0.22, 0.22, math.pi / 2), abs=1e-15)
    p = closed_form_unicycle(Pose(1.0, -2.0, 0.4), ControlInput(0.0, 2.0), 0.7)
    assert (p.x, p.y) == (1.0, -2.0) and p.theta == pytest.approx(0.4 + 1.4)


def test_rk4_matches_closed_form():
    rng = np.random.default_rng(2)
    s0 = rng.uniform([0, 0, -3], [5, 5, 3], (50, 3))
    v = rng.uniform(0, 0.22, 50)
    w = rng.uniform(-2.84, 2.84, 50)
    _, states = rk4_trajectory(s0, v, w, 0.6, 1e-4)
    exact = closed_form_batch(s0, v, w, 0.6)
    assert np.max(np.abs(states[-1] - exact)) < 1e-8


def test_engines_agree():
    X = TMVector.from_box([2.0, 1.0, 0.5], [2.02, 1.02, 0.52], 2)
    ctrl = control_intervals((0.15, 0.22), (0.9, 1.1))
    a, ea = flow_control_period(X, ctrl, engine="compiled")
    b, eb = flow_control_period(X, ctrl, engine="reference")
    for sa, sb in zip(a, b):
        assert np.allclose(sa.box_lo, sb.box_lo, rtol=0, atol=1e-12)
        assert np.allclose(sa.box_hi, sb.box_hi, rtol=0, atol=1e-12)
    assert np.allclose(ea.range()[0], eb.range()[0], rtol=0, atol=1e-12)


@pytest.mark.parametrize("engine", ["compiled", "reference"])
@pytest.mark.parametrize("scenario", SOUNDNESS_SCENARIOS, ids=[s[0] for s in SOUNDNESS_SCENARIOS])
def test_samples_stay_inside(scenario, engine):
    _, lo, hi, v, w, periods = scenario
    bad, checked = flowpipe_violations(lo, hi, v, w, periods, n=100, engine=engine, seed=7)
    assert checked > 0 and bad == 0


def test_width_grows_over_a_period():
    X = TMVector.from_box([1.0, 1.0, -0.05], [1.02, 1.02, 0.05], 2)
    segs, _ = flow_control_period(X, control_intervals((0.2, 0.22), (-0.1, 0.1)))
    widths = [s.box_hi[1] - s.box_lo[1] for s in segs]
    assert all(b >= a for a, b in zip(widths, widths[1:]))


def test_more_substeps_do_not_widen_end_box():
    X = TMVector.from_box([2.0, 1.0, 0.5], [2.02, 1.02, 0.52], 2)
    ctrl = control_intervals((0.15, 0.22), (0.9, 1.1))
    widths = []
    for n in (5, 10, 20, 40):
        _, end = flow_control_period(X, ctrl, 0.2, n)
        lo, hi = end.range()
        widths.append(hi - lo)
    for a, b in zip(widths, widths[1:]):
        assert np.all(b <= a + 1e-12)


@pytest.mark.parametrize("engine", ["compiled", "reference"])
def test_uncertifiable_step_raises(engine):
    X = TMVector.from_box([1.0, 1.0, -3.0], [1.5, 1.5, 3.0], 2)
    with pytest.raises(FlowpipeError):
        flow_control_period(X, control_intervals((0.0, 0.22), (-2.84, 2.84)), 1.0, 1, engine=engine)


def test_rejects_bad_controls_and_arguments():
    with pytest.raises(ValueError):
        flow_control_period(ORIGIN, control_intervals(0.3, 0.0))
    with pytest.raises(ValueError):
        picard_flow_step(ORIGIN, control_intervals(0.1, 3.0), 0.02)
    with pytest.raises(ValueError):
        flow_control_period(ORIGIN, control_intervals(0.1, 0.0), substeps=0)
    with pytest.raises(ValueError):
        flow_control_period(ORIGIN, control_intervals(0.1, 0.0), engine="gpu")
    with pytest.raises(ValueError):
        ControlInput(0.5, 0.0)
    assert ControlInput.clamped(0.5, -9.0) == ControlInput(0.22, -2.84)


def test_wrap_to_pi():
    assert wrap_to_pi(math.pi) == math.pi
    assert wrap_to_pi(-math.pi) == math.pi
    assert wrap_to_pi(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    rng = np.random.default_rng(0)
    for a in rng.uniform(-50, 50, 1000):
        w = wrap_to_pi(a)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
