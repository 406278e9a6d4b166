"""Bounded world, ray-cast LiDAR, obstacle detection and bounded-noise
localization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controllers import Obstacle, ReferencePath
from .flowpipe import Pose, wrap_to_pi

N_RAYS = 360
RANGE_MIN = 0.12
RANGE_MAX = 3.6


@dataclass(frozen=True)
class WorldMap:
    size: float = 5.0
    obstacles: tuple[Obstacle, ...] = ()
    robot_radius: float = 0.11

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for ob in self.obstacles:
            if not (ob.radius < ob.x < self.size - ob.radius and ob.radius < ob.y < self.size - ob.radius):
                raise ValueError(f"obstacle {ob} is not strictly inside the walls")

    def inside(self, x: float, y: float) -> bool:
        return 0.0 < x < self.size and 0.0 < y < self.size

    def clearance(self, x: float, y: float) -> float:
        """Distance from a point to the nearest wall or obstacle surface."""
        c = min(x, y, self.size - x, self.size - y)
        for ob in self.obstacles:
            c = min(c, ob.distance(x, y))
        return c

    def in_collision(self, pose: Pose) -> bool:
        return self.clearance(pose.x, pose.y) < self.robot_radius


@dataclass(frozen=True)
class LidarScan:
    """Ranges in meters, one per degree counter-clockwise from the heading;
    NaN marks a missing return."""

    ranges: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.ranges, dtype=float).copy()
        if r.shape != (N_RAYS,):
            raise ValueError(f"expected {N_RAYS} readings")
        r[(r < RANGE_MIN) | (r > RANGE_MAX)] = np.nan
        object.__setattr__(self, "ranges", r)

    @property
    def angles(self) -> np.ndarray:
        return np.deg2rad(np.arange(N_RAYS))


@dataclass(frozen=True)
class LocalizationEstimate:
    pose: Pose
    uncertainty: tuple[float, float, float]

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        c = self.pose.as_array()
        u = np.asarray(self.uncertainty, dtype=float)
        return c - u, c + u


def raycast_scan(pose: Pose, world: WorldMap) -> LidarScan:
    if not world.inside(pose.x, pose.y):
        raise ValueError("pose outside the walls")
    ang = pose.theta + np.deg2rad(np.arange(N_RAYS))
    dx, dy = np.cos(ang), np.sin(ang)
    best = np.full(N_RAYS, np.inf)
    # walls x = 0, x = size, y = 0, y = size
    with np.errstate(divide="ignore", invalid="ignore"):
        for t in ((0.0 - pose.x) / dx, (world.size - pose.x) / dx, (0.0 - pose.y) / dy, (world.size - pose.y) / dy):
            t = np.where(np.isfinite(t) & (t > 0.0), t, np.inf)
            best = np.minimum(best, t)
    for ob in world.obstacles:
        ox, oy = pose.x - ob.x, pose.y - ob.y
        b = ox * dx + oy * dy
        c = ox * ox + oy * oy - ob.radius ** 2
        disc = b * b - c
        hit = disc >= 0.0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t1 = -b - sq
        t2 = -b + sq
        t = np.where(t1 > 0.0, t1, t2)
        t = np.where(hit & (t > 0.0), t, np.inf)
        best = np.minimum(best, t)
    best[~np.isfinite(best)] = np.nan
    return LidarScan(best)


def localize(true_pose: Pose, halfwidths, rng) -> LocalizationEstimate:
    """Estimate within ``halfwidths`` of the truth, drawn uniformly."""
    hw = np.asarray(halfwidths, dtype=float)
    if np.any(hw < 0):
        raise ValueError("halfwidths must be non-negative")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    noise = rng.uniform(-1.0, 1.0, 3) * hw
    # keep the estimate inside the box even after float rounding
    est = np.clip(true_pose.as_array() + noise, true_pose.as_array() - hw, true_pose.as_array() + hw)
    return LocalizationEstimate(Pose(float(est[0]), float(est[1]), float(est[2])), tuple(float(v) for v in hw))


# -- detection -------------------------------------------------------------

@dataclass(frozen=True)
class DetectionConfig:
    wall_margin: float = 0.05
    cluster_gap: float = 0.15
    max_obstacle_radius: float = 0.4
    fit_tolerance: float = 1e-7
    min_arc: float = math.radians(2.0)
    max_fit_error: float = 0.02
    margin: float = 1e-3


def scan_points(scan: LidarScan, estimate: LocalizationEstimate) -> tuple[np.ndarray, np.ndarray]:
    """World-frame returns (as seen from the estimate) with their ray indices."""
    ok = np.isfinite(scan.ranges)
    idx = np.nonzero(ok)[0]
    r = scan.ranges[idx]
    a = estimate.pose.theta + scan.angles[idx]
    pts = np.column_stack([estimate.pose.x + r * np.cos(a), estimate.pose.y + r * np.sin(a)])
    return pts, idx


def cluster_points(pts: np.ndarray, idx: np.ndarray, gap: float, with_index: bool = False):
    """Split returns into runs of adjacent rays whose points are within ``gap``."""
    if len(pts) == 0:
        return ([], []) if with_index else []
    breaks = [0]
    for k in range(1, len(pts)):
        if idx[k] != idx[k - 1] + 1 or np.hypot(*(pts[k] - pts[k - 1])) > gap:
            breaks.append(k)
    groups = [list(range(s, e)) for s, e in zip(breaks, breaks[1:] + [len(pts)])]
    # the scan wraps from ray 359 to ray 0
    if len(groups) > 1 and idx[0] == 0 and idx[-1] == N_RAYS - 1 and np.hypot(*(pts[0] - pts[-1])) <= gap:
        groups[0] = groups[-1] + groups[0]
        groups.pop()
    if with_index:
        return [pts[g] for g in groups], [idx[g] for g in groups]
    return [pts[g] for g in groups]


def merge_stragglers(clusters: list[np.ndarray], idx_groups: list[np.ndarray], reach: float) -> list[np.ndarray]:
    """Fold clusters of one or two points (grazing returns at a silhouette
    edge) into a neighbouring cluster on the adjacent ray within ``reach``."""
    cl = [c for c in clusters]
    ix = [g for g in idx_groups]
    k = 0
    while k < len(cl):
        if len(cl) > 1 and len(cl[k]) < 3:
            best = None
            for j in (k - 1, k + 1):
                if 0 <= j < len(cl):
                    adjacent = abs(int(ix[j][-1 if j < k else 0]) - int(ix[k][0 if j < k else -1])) == 1
                    near = np.hypot(*(cl[j][:, None, :] - cl[k][None, :, :]).T).min() <= reach
                    if adjacent and near and (best is None or len(cl[j]) > len(cl[best])):
                        best = j
            if best is not None:
                lo, hi = sorted((best, k))
                cl[lo] = np.vstack([cl[lo], cl[hi]])
                ix[lo] = np.concatenate([ix[lo], ix[hi]])
                del cl[hi], ix[hi]
                k = 0
                continue
        k += 1
    return cl


def fit_circle(pts: np.ndarray) -> tuple[float, float, float, float]:
    """Algebraic least-squares circle; returns (cx, cy, r, max residual)."""
    # shift to the centroid for conditioning
    m = pts.mean(axis=0)
    q = pts - m
    A = np.column_stack([2.0 * q[:, 0], 2.0 * q[:, 1], np.ones(len(q))])
    b = (q ** 2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    cx, cy, c = sol
    r2 = c + cx * cx + cy * cy
    if not r2 > 0.0:
        return float(m[0]), float(m[1]), 0.0, math.inf
    r = math.sqrt(r2)
    res = np.abs(np.hypot(q[:, 0] - cx, q[:, 1] - cy) - r).max()
    return float(cx + m[0]), float(cy + m[1]), r, float(res)


def min_enclosing_circle(pts: np.ndarray) -> tuple[float, float, float]:
    """Smallest enclosing circle (Welzl's incremental form, deterministic order)."""
    P = [tuple(map(float, p)) for p in pts]
    if not P:
        raise ValueError("no points")

    def inside(c, p):
        return math.hypot(p[0] - c[0], p[1] - c[1]) <= c[2] * (1.0 + 1e-12) + 1e-12

    def two(a, b):
        cx, cy = 0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])
        return (cx, cy, max(math.hypot(a[0] - cx, a[1] - cy), math.hypot(b[0] - cx, b[1] - cy)))

    def three(a, b, c):
        d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
        if abs(d) < 1e-18:
            pairs = [two(a, b), two(a, c), two(b, c)]
            return max(pairs, key=lambda t: t[2])
        ux = ((a[0] ** 2 + a[1] ** 2) * (b[1] - c[1]) + (b[0] ** 2 + b[1] ** 2) * (c[1] - a[1]) + (c[0] ** 2 + c[1] ** 2) * (a[1] - b[1])) / d
        uy = ((a[0] ** 2 + a[1] ** 2) * (c[0] - b[0]) + (b[0] ** 2 + b[1] ** 2) * (a[0] - c[0]) + (c[0] ** 2 + c[1] ** 2) * (b[0] - a[0])) / d
        return (ux, uy, max(math.hypot(p[0] - ux, p[1] - uy) for p in (a, b, c)))

    c = (P[0][0], P[0][1], 0.0)
    for i, p in enumerate(P):
        if inside(c, p):
            continue
        c = (p[0], p[1], 0.0)
        for j in range(i):
            q = P[j]
            if inside(c, q):
                continue
            c = two(p, q)
            for k in range(j):
                if not inside(c, P[k]):
                    c = three(p, q, P[k])
    r = max(math.hypot(p[0] - c[0], p[1] - c[1]) for p in P)
    return c[0], c[1], r


def _arc_extent(pts: np.ndarray, cx: float, cy: float) -> float:
    a = np.sort(np.arctan2(pts[:, 1] - cy, pts[:, 0] - cx))
    gaps = np.diff(np.concatenate([a, [a[0] + 2 * math.pi]]))
    return 2 * math.pi - gaps.max()


def detect_obstacles(
    scan: LidarScan,
    estimate: LocalizationEstimate,
    world: WorldMap,
    cfg: DetectionConfig = DetectionConfig(),
) -> list[Obstacle]:
    """Circles that contain every obstacle seen in ``scan``.

    Returns are placed using the estimated pose. The estimate differs from
    the true pose by a rigid motion, so returns from one obstacle still lie
    exactly on a circle of the true radius whose center is displaced by at
    most ``|(ux, uy)| + u_theta * range``; the fitted circle is inflated by
    that amount. Clusters that do not fit a circle fall back to their
    smallest enclosing circle grown by the largest obstacle diameter.
    """
    pts, idx = scan_points(scan, estimate)
    if len(pts) == 0:
        return []
    ux, uy, ut = estimate.uncertainty
    pos_err = math.hypot(ux, uy)
    ex, ey = estimate.pose.x, estimate.pose.y
    rng_ = scan.ranges[idx]
    # chord length for a rotation by ut is <= ut * range
    perr = pos_err + ut * rng_
    S = world.size
    near_wall = np.minimum.reduce([pts[:, 0], pts[:, 1], S - pts[:, 0], S - pts[:, 1]]) <= cfg.wall_margin + perr
    keep = ~near_wall
    pts, idx, perr = pts[keep], idx[keep], perr[keep]
    out: list[Obstacle] = []
    clusters, groups = cluster_points(pts, idx, cfg.cluster_gap, with_index=True)
    for cl in merge_stragglers(clusters, groups, 2.0 * cfg.max_obstacle_radius):
        err = pos_err + ut * float(np.hypot(cl[:, 0] - ex, cl[:, 1] - ey).max())
        fitted = None
        if len(cl) >= 3:
            cx, cy, r, res = fit_circle(cl)
            arc = _arc_extent(cl, cx, cy) if r > 0.0 else 0.0
            if res <= cfg.fit_tolerance and 0.0 < r <= cfg.max_obstacle_radius * 1.5 and arc >= cfg.min_arc:
                # a circle within res of points spanning an arc of angle
                # arc cannot move its center by more than ~2 res / (1 - cos(arc / 2))
                fit_err = 4.0 * (res + 1e-12) / (1.0 - math.cos(0.5 * arc))
                if fit_err <= cfg.max_fit_error:
                    center_err = pos_err + ut * math.hypot(cx - ex, cy - ey)
                    fitted = Obstacle(cx, cy, r + 2.0 * fit_err + center_err + cfg.margin)
        if fitted is None:
            cx, cy, r = min_enclosing_circle(cl)
            fitted = Obstacle(cx, cy, r + 2.0 * cfg.max_obstacle_radius + err + cfg.margin)
        out.append(fitted)
    return out


# -- scenarios -------------------------------------------------------------

@dataclass
class Scenario:
    world: WorldMap
    start: Pose
    path: ReferencePath
    noise: tuple[float, float, float] = (0.01, 0.01, 0.01)
    seed: int = 0
    name: str = "scenario"
    detection: DetectionConfig = field(default_factory=DetectionConfig)


def random_obstacles(
    path: ReferencePath,
    count: int,
    rng: np.random.Generator,
    start: Pose,
    size: float = 5.0,
    radius_range=(0.15, 0.4),
    lateral: float = 0.15,
    min_start_gap: float = 1.0,
    min_goal_gap: float = 0.6,
    separation: float = 0.8,
    wall_gap: float = 0.3,
    max_tries: int = 10000,
) -> list[Obstacle]:
    """Obstacles on the path corridor, spread along it and away from the
    start, the goal line and each other. A set that cannot be completed is
    discarded and drawn again."""
    s_hi = path.project(*path.point_at(path.length))[0]
    per_set = max(1, max_tries // 20)
    for _ in range(20):
        obs: list[Obstacle] = []
        for _ in range(per_set):
            if len(obs) == count:
                break
            r = float(rng.uniform(*radius_range))
            s = float(rng.uniform(0.0, s_hi))
            px, py = path.point_at(s)
            qx, qy = path.point_at(min(s + 0.01, path.length))
            nx, ny = -(qy - py), qx - px
            nn = math.hypot(nx, ny) or 1.0
            off = float(rng.uniform(-lateral, lateral))
            cx, cy = px + off * nx / nn, py + off * ny / nn
            if math.hypot(cx - start.x, cy - start.y) < min_start_gap + r:
                continue
            if cy + r > path.goal_y - min_goal_gap:
                continue
            if min(cx, cy, size - cx, size - cy) < r + wall_gap:
                continue
            if any(math.hypot(cx - o.x, cy - o.y) < separation + r + o.radius for o in obs):
                continue
            obs.append(Obstacle(cx, cy, r))
        if len(obs) == count:
            return obs
    raise RuntimeError(f"could not place {count} obstacles")
