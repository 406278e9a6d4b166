"""Runtime verification of the learned controller and the switching loop."""

from __future__ import annotations

import io
import csv
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .controllers import AvoidanceConfig, Obstacle, kb_control
from .flowpipe import (
    OMEGA_CAP,
    V_CAP,
    ControlInput,
    Flowpipe,
    FlowpipeError,
    Pose,
    closed_form_unicycle,
    flow_control_period,
    wrap_to_pi,
)
from .interval import Interval, down, up
from .network import NetworkSpec, nn_eval, nn_tm_propagate
from .taylor import TMVector
from .world import LocalizationEstimate, Scenario, detect_obstacles, localize, raycast_scan

NN = "NN"
BACKUP = "BACKUP"
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class VerificationSettings:
    steps: int = 10
    tm_degree: int = 2
    bp_order: int = 2
    delta: float = 0.2
    substeps: int = 10
    picard_iters: int = 3
    symbolic_remainder: bool = True
    engine: str = "compiled"
    # widen the network input box by the localization error after the first
    # period: the controller will then see a noisy estimate, not the truth
    noisy_inputs: bool = True

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.tm_degree < 1 or self.bp_order < 1:
            raise ValueError("tm_degree and bp_order must be >= 1")


@dataclass
class SafetyVerdict:
    safe: bool
    flowpipe: Flowpipe
    first_violation: Optional[tuple[int, int]] = None  # (step, obstacle index; -1 for walls)
    runtime_seconds: float = 0.0
    failed: bool = False  # unsafe because the enclosure could not be computed

    @property
    def label(self) -> str:
        if self.failed:
            return "failed"
        return "safe" if self.safe else "unsafe"


@dataclass(frozen=True)
class SupervisorMode:
    mode: str = NN
    obstacle: Optional[int] = None

    def __post_init__(self):
        if self.mode not in (NN, BACKUP):
            raise ValueError(f"unknown mode {self.mode!r}")


def theta_pieces(lo: float, hi: float) -> list[tuple[float, float]]:
    """Cover the angles in [lo, hi] by intervals inside [-pi, pi]."""
    if hi - lo >= TWO_PI:
        return [(-math.pi, math.pi)]
    shift = TWO_PI * round(0.5 * (lo + hi) / TWO_PI)
    if shift != 0.0:
        lo, hi = down(lo - shift), up(hi - shift)
    if hi > math.pi:
        return [(lo, math.pi), (-math.pi, min(up(hi - TWO_PI), math.pi))]
    if lo < -math.pi:
        return [(-math.pi, hi), (max(down(lo + TWO_PI), -math.pi), math.pi)]
    return [(lo, hi)]


def nn_control_bounds(net: NetworkSpec, lo, hi, settings: VerificationSettings) -> tuple[Interval, Interval]:
    """Interval hull of the network output over a state box, clipped to the
    actuator limits."""
    vlo = wlo = math.inf
    vhi = whi = -math.inf
    for tlo, thi in theta_pieces(float(lo[2]), float(hi[2])):
        tm = TMVector.from_box([lo[0], lo[1], tlo], [hi[0], hi[1], thi], settings.tm_degree)
        out = nn_tm_propagate(net, tm, settings.bp_order, settings.tm_degree, settings.symbolic_remainder)
        olo, ohi = out.range()
        vlo, vhi = min(vlo, olo[0]), max(vhi, ohi[0])
        wlo, whi = min(wlo, olo[1]), max(whi, ohi[1])
    clip = lambda a, c: min(max(a, -c), c)
    return (
        Interval(clip(vlo, V_CAP), clip(vhi, V_CAP)),
        Interval(clip(wlo, OMEGA_CAP), clip(whi, OMEGA_CAP)),
    )


def box_hits_circle(xlo, xhi, ylo, yhi, cx, cy, r) -> bool:
    dx = max(xlo - cx, 0.0, cx - xhi)
    dy = max(ylo - cy, 0.0, cy - yhi)
    # a small slack keeps the test conservative under rounding
    return math.hypot(dx, dy) <= r + 1e-9


def verify_nn_safe(
    estimate: LocalizationEstimate,
    net: NetworkSpec,
    obstacles: list[Obstacle],
    steps: Optional[int] = None,
    settings: VerificationSettings = VerificationSettings(),
    world_size: float = 5.0,
    robot_radius: float = 0.11,
) -> SafetyVerdict:
    """Check the reachable set of the learned controller against the
    obstacles (inflated by the robot radius) and the walls."""
    steps = settings.steps if steps is None else steps
    if steps < 1:
        raise ValueError("steps must be >= 1")
    t0 = time.perf_counter()
    fp = Flowpipe()
    hw = np.asarray(estimate.uncertainty, dtype=float)
    lo, hi = estimate.box()
    state = TMVector.from_box(down(lo), up(hi), settings.tm_degree)
    wall_lo, wall_hi = robot_radius, world_size - robot_radius

    def done(safe, viol=None, failed=False):
        return SafetyVerdict(safe, fp, viol, time.perf_counter() - t0, failed)

    for k in range(steps):
        slo, shi = state.range()
        if k > 0 and settings.noisy_inputs:
            slo, shi = down(slo - hw), up(shi + hw)
        try:
            control = nn_control_bounds(net, slo, shi, settings)
            segs, state = flow_control_period(
                state, control, settings.delta, settings.substeps, settings.tm_degree,
                settings.picard_iters, settings.engine,
            )
        except FlowpipeError:
            return done(False, (k, -1), failed=True)
        fp.extend(segs, k * settings.delta)
        for seg in segs:
            xlo, xhi, ylo, yhi = seg.xy_box
            if xlo < wall_lo or ylo < wall_lo or xhi > wall_hi or yhi > wall_hi:
                return done(False, (k, -1))
            for j, ob in enumerate(obstacles):
                if box_hits_circle(xlo, xhi, ylo, yhi, ob.x, ob.y, ob.radius + robot_radius):
                    return done(False, (k, j))
    return done(True)


def nn_control(net: NetworkSpec, estimate: LocalizationEstimate) -> ControlInput:
    p = estimate.pose
    out = nn_eval(net, np.array([p.x, p.y, wrap_to_pi(p.theta)]))
    return ControlInput.clamped(float(out[0]), float(out[1]))


def nearest_obstacle(pose: Pose, obstacles: list[Obstacle]) -> Optional[int]:
    if not obstacles:
        return None
    return int(np.argmin([ob.distance(pose.x, pose.y) for ob in obstacles]))


def transition(mode: SupervisorMode, verdict_safe: bool) -> str:
    """The mode machine; depends only on the verdict."""
    return NN if verdict_safe else BACKUP


def supervisor_step(
    mode: SupervisorMode,
    verdict: SafetyVerdict,
    estimate: LocalizationEstimate,
    obstacles: list[Obstacle],
    net: NetworkSpec,
    avoid: AvoidanceConfig = AvoidanceConfig(),
) -> tuple[SupervisorMode, ControlInput]:
    nxt = transition(mode, verdict.safe)
    if nxt == NN:
        return SupervisorMode(NN), nn_control(net, estimate)
    if mode.mode == NN and verdict.first_violation is not None and verdict.first_violation[1] >= 0:
        target = verdict.first_violation[1]
    else:
        target = nearest_obstacle(estimate.pose, obstacles)
    if target is None:
        # nothing to circle (wall or failure verdict without obstacles): stop
        return SupervisorMode(BACKUP, None), ControlInput(0.0, 0.0)
    try:
        u = kb_control(estimate.pose, obstacles[target], avoid)
    except ValueError:
        u = ControlInput(0.0, 0.0)
    return SupervisorMode(BACKUP, target), ControlInput.clamped(u.v, u.omega)


# -- episodes --------------------------------------------------------------

LOG_COLUMNS = ("t", "x", "y", "theta", "mode", "v", "omega", "verdict", "verify_runtime_s", "deadline_miss")
WALLCLOCK_COLUMNS = ("verify_runtime_s", "deadline_miss")


@dataclass
class TickRecord:
    t: float
    x: float
    y: float
    theta: float
    mode: str
    v: float
    omega: float
    verdict: str
    verify_runtime_s: float
    deadline_miss: bool


@dataclass
class EpisodeLog:
    rows: list[TickRecord] = field(default_factory=list)
    status: str = "running"
    boxes: list[list[tuple[float, float, float, float]]] = field(default_factory=list)
    final_pose: Optional[Pose] = None
    obstacles: tuple[Obstacle, ...] = ()
    min_clearance: float = math.inf
    delta: float = 0.2

    @property
    def modes(self) -> list[str]:
        return [r.mode for r in self.rows]

    @property
    def total_time(self) -> float:
        return len(self.rows) * self.delta

    @property
    def backup_time(self) -> float:
        return sum(1 for r in self.rows if r.mode == BACKUP) * self.delta

    @property
    def utilization(self) -> float:
        return 100.0 * self.backup_time / self.total_time if self.rows else 0.0

    @property
    def mean_runtime(self) -> float:
        return float(np.mean([r.verify_runtime_s for r in self.rows])) if self.rows else 0.0

    @property
    def deadline_misses(self) -> int:
        return sum(r.deadline_miss for r in self.rows)

    def switch_cycles(self) -> int:
        """Number of NN -> BACKUP -> NN round trips."""
        n = 0
        seen_backup = False
        prev = NN
        for m in self.modes:
            if prev == NN and m == BACKUP:
                seen_backup = True
            if prev == BACKUP and m == NN and seen_backup:
                n += 1
                seen_backup = False
            prev = m
        return n

    def to_csv(self, include_wallclock: bool = True) -> str:
        cols = [c for c in LOG_COLUMNS if include_wallclock or c not in WALLCLOCK_COLUMNS]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            vals = {
                "t": repr(r.t), "x": repr(r.x), "y": repr(r.y), "theta": repr(r.theta), "mode": r.mode,
                "v": repr(r.v), "omega": repr(r.omega), "verdict": r.verdict,
                "verify_runtime_s": f"{r.verify_runtime_s:.6f}", "deadline_miss": int(r.deadline_miss),
            }
            w.writerow([vals[c] for c in cols])
        return buf.getvalue()


@dataclass(frozen=True)
class EpisodeSettings:
    timeout: float = 200.0
    deadline: float = 0.2
    collision_samples: int = 20
    record_boxes: bool = True


def run_episode(
    scenario: Scenario,
    net: NetworkSpec,
    settings: VerificationSettings = VerificationSettings(),
    avoid: AvoidanceConfig = AvoidanceConfig(),
    episode: EpisodeSettings = EpisodeSettings(),
) -> EpisodeLog:
    """Sense, localize, detect, verify, switch and move, every ``delta``
    seconds of simulated time."""
    world = scenario.world
    rng = np.random.default_rng(scenario.seed)
    delta = settings.delta
    logbook = EpisodeLog(obstacles=world.obstacles, delta=delta)
    mode = SupervisorMode(NN)
    p = scenario.start
    n_ticks = int(round(episode.timeout / delta))
    logbook.min_clearance = world.clearance(p.x, p.y) - world.robot_radius
    for k in range(n_ticks):
        if scenario.path.in_goal(p):
            logbook.status = "goal"
            break
        scan = raycast_scan(p, world)
        est = localize(p, scenario.noise, rng)
        dets = detect_obstacles(scan, est, world, scenario.detection)
        verdict = verify_nn_safe(est, net, dets, settings.steps, settings, world.size, world.robot_radius)
        mode, u = supervisor_step(mode, verdict, est, dets, net, avoid)
        logbook.rows.append(
            TickRecord(
                k * delta, p.x, p.y, p.theta, mode.mode, u.v, u.omega, verdict.label,
                verdict.runtime_seconds, verdict.runtime_seconds > episode.deadline,
            )
        )
        if episode.record_boxes:
            logbook.boxes.append(verdict.flowpipe.xy_boxes)
        hit = False
        for s in range(1, episode.collision_samples + 1):
            q = closed_form_unicycle(p, u, delta * s / episode.collision_samples)
            c = world.clearance(q.x, q.y) - world.robot_radius
            logbook.min_clearance = min(logbook.min_clearance, c)
            if c < 0.0:
                hit = True
        p = closed_form_unicycle(p, u, delta).wrapped()
        if hit:
            logbook.status = "collision"
            break
    else:
        logbook.status = "goal" if scenario.path.in_goal(p) else "timeout"
    logbook.final_pose = p
    return logbook
