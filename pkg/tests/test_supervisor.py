import math

import numpy as np
import pytest

from _oracles import closed_form_batch
from rtverify.controllers import AvoidanceConfig, Obstacle, ReferencePath, kb_control
from rtverify.flowpipe import Flowpipe, Pose
from rtverify.network import NetworkSpec, nn_eval
from rtverify.supervisor import (
    BACKUP,
    LOG_COLUMNS,
    NN,
    EpisodeLog,
    EpisodeSettings,
    SafetyVerdict,
    SupervisorMode,
    TickRecord,
    VerificationSettings,
    nn_control,
    run_episode,
    supervisor_step,
    theta_pieces,
    verify_nn_safe,
)
from rtverify.world import LocalizationEstimate, Scenario, WorldMap


def constant_net(v, w):
    """Network whose output is the constant (v, w)."""
    return NetworkSpec.from_arrays([np.zeros((2, 3))], [np.array([v, w])])


def estimate(x, y, th, u=0.01):
    return LocalizationEstimate(Pose(x, y, th), (u, u, u))


def test_no_obstacles_mid_map_is_safe(trained_net):
    v = verify_nn_safe(estimate(1.5, 1.0, 0.0), trained_net, [])
    assert v.safe and v.first_violation is None and not v.failed
    assert len(v.flowpipe.segments) == 10 * 10
    assert v.label == "safe"


def test_obstacle_just_ahead_is_unsafe():
    net = constant_net(0.22, 0.0)
    ob = Obstacle(2.3, 2.0, 0.2)
    v = verify_nn_safe(estimate(2.0, 2.0, 0.0), net, [ob], steps=10)
    assert not v.safe and not v.failed
    step, j = v.first_violation
    assert j == 0 and 0 <= step < 10
    assert v.label == "unsafe"


def test_obstacle_behind_is_safe():
    net = constant_net(0.22, 0.0)
    v = verify_nn_safe(estimate(4.0, 2.0, 0.0), net, [Obstacle(1.0, 2.0, 0.3)], steps=10)
    # the wall is 1 m ahead; the reachable hull spans at most 0.44 m
    assert v.safe
    xs = [s.box_hi[0] for s in v.flowpipe.segments]
    assert max(xs) <= 4.0 + 0.01 + 0.44 + 1e-6


def test_wall_violation_is_flagged():
    v = verify_nn_safe(estimate(4.6, 2.0, 0.0), constant_net(0.22, 0.0), [])
    assert not v.safe and v.first_violation[1] == -1


def test_verdicts_are_prefix_monotone(trained_net):
    rng = np.random.default_rng(5)
    for _ in range(8):
        est = estimate(rng.uniform(1, 4), rng.uniform(1, 4), rng.uniform(-3, 3))
        ob = Obstacle(rng.uniform(1, 4), rng.uniform(1, 4), 0.3)
        if ob.distance(est.pose.x, est.pose.y) < 0.2:
            continue
        short = verify_nn_safe(est, trained_net, [ob], steps=10)
        long = verify_nn_safe(est, trained_net, [ob], steps=30)
        if long.safe:
            assert short.safe
        if not short.safe:
            assert not long.safe and long.first_violation == short.first_violation


def test_safe_verdict_covers_sampled_closed_loop_runs(trained_net):
    """10^3 rollouts per safe verdict, the controller seeing a noisy estimate
    after the first period, stay inside the flowpipe and off the obstacle."""
    rng = np.random.default_rng(8)
    safe_cases = 0
    for _ in range(6):
        est = estimate(rng.uniform(1, 3), rng.uniform(0.8, 1.5), rng.uniform(-0.3, 0.3))
        ob = Obstacle(est.pose.x + 2.0, est.pose.y + rng.uniform(-0.5, 0.5), 0.25)
        v = verify_nn_safe(est, trained_net, [ob], steps=10)
        if not v.safe:
            continue
        safe_cases += 1
        lo, hi = est.box()
        s = rng.uniform(lo, hi, (1000, 3))
        for k in range(10):
            seen = s + rng.uniform(-0.01, 0.01, s.shape) * (k > 0)
            u = nn_eval(trained_net, seen)
            vs = np.clip(u[:, 0], -0.22, 0.22)
            ws = np.clip(u[:, 1], -2.84, 2.84)
            for seg in v.flowpipe.segments[k * 10 : (k + 1) * 10]:
                for t in np.linspace(seg.t0, seg.t1, 3):
                    q = closed_form_batch(s, vs, ws, t - 0.2 * k)
                    assert np.all((q[:, :2] >= seg.box_lo[:2]) & (q[:, :2] <= seg.box_hi[:2]))
                    assert np.all(np.hypot(q[:, 0] - ob.x, q[:, 1] - ob.y) - ob.radius > 0.11)
            s = closed_form_batch(s, vs, ws, 0.2)
    assert safe_cases > 0


def test_theta_pieces_cover_wrap():
    assert theta_pieces(-0.5, 0.5) == [(-0.5, 0.5)]
    assert len(theta_pieces(3.0, 3.3)) == 2
    assert theta_pieces(-10, 10) == [(-math.pi, math.pi)]
    for lo, hi in [(3.0, 3.3), (6.0, 6.5), (-3.5, -3.0), (-7.0, -6.0), (0.2, 0.3)]:
        pieces = theta_pieces(lo, hi)
        for lo_, hi_ in pieces:
            assert -math.pi <= lo_ <= hi_ <= math.pi
        for a in np.linspace(lo, hi, 200):
            w = math.remainder(a, 2 * math.pi)
            assert any(p0 <= w <= p1 for p0, p1 in pieces)


def _verdict(safe, viol=None):
    return SafetyVerdict(safe, Flowpipe(), viol)


def test_transitions(trained_net):
    ob = [Obstacle(3.0, 1.0, 0.3)]
    est = estimate(2.0, 1.0, 0.0)
    m, u = supervisor_step(SupervisorMode(NN), _verdict(True), est, ob, trained_net)
    assert m.mode == NN and u == nn_control(trained_net, est)
    m, u = supervisor_step(SupervisorMode(NN), _verdict(False, (3, 0)), est, ob, trained_net)
    assert m.mode == BACKUP and m.obstacle == 0
    assert u == kb_control(est.pose, ob[0], AvoidanceConfig())
    m2, _ = supervisor_step(m, _verdict(False, (1, 0)), est, ob, trained_net)
    assert m2.mode == BACKUP
    m3, _ = supervisor_step(m2, _verdict(True), est, ob, trained_net)
    assert m3.mode == NN
    m, u = supervisor_step(SupervisorMode(NN), _verdict(False, (0, -1)), est, [], trained_net)
    assert m.mode == BACKUP and (u.v, u.omega) == (0.0, 0.0)
    with pytest.raises(ValueError):
        SupervisorMode("OTHER")


def test_log_metrics_and_csv():
    rows = [TickRecord(0.2 * k, 1.0, 1.0, 0.0, m, 0.1, 0.0, "safe", 0.01, False) for k, m in enumerate("NNBBNBN")]
    rows = [TickRecord(r.t, r.x, r.y, r.theta, NN if r.mode == "N" else BACKUP, r.v, r.omega, r.verdict, 0.3 if i == 2 else 0.01, i == 2) for i, r in enumerate(rows)]
    log = EpisodeLog(rows)
    assert log.switch_cycles() == 2
    assert log.utilization == pytest.approx(100 * 3 / 7)
    assert log.deadline_misses == 1
    text = log.to_csv()
    assert text.splitlines()[0] == ",".join(LOG_COLUMNS)
    assert "verify_runtime_s" not in log.to_csv(include_wallclock=False)


def test_episode_without_obstacles_stays_in_nn(trained_net):
    sc = Scenario(WorldMap(), Pose(0.5, 1.0, 0.0), ReferencePath.left_turn(), seed=0)
    log = run_episode(sc, trained_net, episode=EpisodeSettings(record_boxes=False))
    assert log.status == "goal"
    assert set(log.modes) == {NN}
    assert log.min_clearance > 0


def test_episode_timeout_and_bad_settings(trained_net):
    sc = Scenario(WorldMap(), Pose(0.5, 1.0, 0.0), ReferencePath.left_turn(), seed=0)
    log = run_episode(sc, trained_net, episode=EpisodeSettings(timeout=1.0))
    assert log.status == "timeout" and len(log.rows) == 5 and len(log.boxes) == 5
    with pytest.raises(ValueError):
        VerificationSettings(steps=0)
    with pytest.raises(ValueError):
        VerificationSettings(tm_degree=0)
