"""Geometric obstacle-avoidance controller and the scripted expert."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flowpipe import OMEGA_CAP, V_CAP, ControlInput, Pose, wrap_to_pi


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("obstacle radius must be positive")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x, self.y)

    def distance(self, px: float, py: float) -> float:
        """Distance from a point to the disk boundary (negative inside)."""
        return math.hypot(px - self.x, py - self.y) - self.radius


@dataclass(frozen=True)
class AvoidanceConfig:
    d: float = 0.75
    v_cap: float = V_CAP
    omega_cap: float = OMEGA_CAP
    tangential_source: str = "u_m"
    robot_radius: float = 0.11

    def __post_init__(self):
        if self.tangential_source not in ("u_m", "u_p"):
            raise ValueError("tangential_source must be 'u_m' or 'u_p'")
        if not self.d > self.robot_radius:
            raise ValueError("standoff distance must exceed the robot radius")
        if self.v_cap > V_CAP or self.omega_cap > OMEGA_CAP:
            raise ValueError("caps exceed actuator limits")


@dataclass(frozen=True)
class AvoidanceTerms:
    u_m: np.ndarray
    u_p: np.ndarray
    u_v: np.ndarray
    u: np.ndarray
    phi: float


def kb_terms(pose: Pose, obstacle: Obstacle, cfg: AvoidanceConfig) -> AvoidanceTerms:
    u_m = np.array([obstacle.x - pose.x, obstacle.y - pose.y], dtype=float)
    n = math.hypot(u_m[0], u_m[1])
    if n <= 1e-9:
        raise ValueError("robot position coincides with the obstacle center")
    u_p = u_m - (u_m / n) * cfg.d
    src = u_m if cfg.tangential_source == "u_m" else u_p
    # rotate by +90 degrees: R = [[0, -1], [1, 0]]
    u_v = np.array([-src[1], src[0]])
    u = u_p + u_v
    return AvoidanceTerms(u_m, u_p, u_v, u, math.atan2(u[1], u[0]))


def kb_control(pose: Pose, obstacle: Obstacle, cfg: AvoidanceConfig = AvoidanceConfig()) -> ControlInput:
    terms = kb_terms(pose, obstacle, cfg)
    v = min(cfg.v_cap, math.hypot(terms.u[0], terms.u[1]))
    omega = min(max(wrap_to_pi(terms.phi - pose.theta), -cfg.omega_cap), cfg.omega_cap)
    return ControlInput(v, omega)


class ReferencePath:
    """Dense polyline with arc-length parameterization and a goal zone."""

    def __init__(self, points, goal_y: float):
        self.points = np.asarray(points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 2 or len(self.points) < 2:
            raise ValueError("path needs at least two 2-D points")
        seg = np.diff(self.points, axis=0)
        self.seg_len = np.hypot(seg[:, 0], seg[:, 1])
        self.s = np.concatenate([[0.0], np.cumsum(self.seg_len)])
        self.length = float(self.s[-1])
        self.goal_y = float(goal_y)

    @classmethod
    def left_turn(
        cls,
        start=(0.5, 1.0),
        corner=(3.0, 1.0),
        radius: float = 1.0,
        end_y: float = 4.5,
        goal_y: float = 4.0,
        resolution: float = 0.01,
    ) -> "ReferencePath":
        """Straight east, quarter arc turning north, straight north."""
        sx, sy = start
        cx, cy = corner
        n1 = max(2, int(math.ceil((cx - sx) / resolution)) + 1)
        line1 = np.column_stack([np.linspace(sx, cx, n1), np.full(n1, sy)])
        na = max(3, int(math.ceil(0.5 * math.pi * radius / resolution)) + 1)
        ang = np.linspace(-0.5 * math.pi, 0.0, na)
        arc = np.column_stack([cx + radius * np.cos(ang), cy + radius + radius * np.sin(ang)])
        ex, ey = cx + radius, cy + radius
        n2 = max(2, int(math.ceil((end_y - ey) / resolution)) + 1)
        line2 = np.column_stack([np.full(n2, ex), np.linspace(ey, end_y, n2)])
        pts = np.vstack([line1, arc[1:], line2[1:]])
        return cls(pts, goal_y)

    def project(self, x: float, y: float) -> tuple[float, float]:
        """Arc length of the closest path point and the distance to it."""
        a = self.points[:-1]
        d = self.points[1:] - a
        L2 = np.maximum(self.seg_len ** 2, 1e-300)
        tt = np.clip(((x - a[:, 0]) * d[:, 0] + (y - a[:, 1]) * d[:, 1]) / L2, 0.0, 1.0)
        px = a[:, 0] + tt * d[:, 0]
        py = a[:, 1] + tt * d[:, 1]
        dist = np.hypot(px - x, py - y)
        i = int(np.argmin(dist))
        return float(self.s[i] + tt[i] * self.seg_len[i]), float(dist[i])

    def point_at(self, s: float) -> tuple[float, float]:
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.s, s, side="right") - 1)
        i = min(i, len(self.seg_len) - 1)
        f = (s - self.s[i]) / self.seg_len[i] if self.seg_len[i] > 0 else 0.0
        p = self.points[i] + f * (self.points[i + 1] - self.points[i])
        return float(p[0]), float(p[1])

    def in_goal(self, pose: Pose) -> bool:
        return pose.y >= self.goal_y


@dataclass(frozen=True)
class ExpertConfig:
    lookahead: float = 0.5
    v: float = V_CAP
    omega_max: float = 1.5


def expert_control(pose: Pose, path: ReferencePath, cfg: ExpertConfig = ExpertConfig()) -> ControlInput:
    """Pure pursuit toward the point ``lookahead`` ahead along the path."""
    if path.in_goal(pose):
        return ControlInput(0.0, 0.0)
    s, _ = path.project(pose.x, pose.y)
    if s >= path.length - 1e-9:
        return ControlInput(0.0, 0.0)
    lx, ly = path.point_at(s + cfg.lookahead)
    alpha = wrap_to_pi(math.atan2(ly - pose.y, lx - pose.x) - pose.theta)
    if abs(alpha) > 0.5 * math.pi:
        omega = math.copysign(cfg.omega_max, alpha)
    else:
        dist = max(math.hypot(lx - pose.x, ly - pose.y), 1e-6)
        omega = min(max(2.0 * cfg.v * math.sin(alpha) / dist, -cfg.omega_max), cfg.omega_max)
    return ControlInput.clamped(cfg.v, omega)
