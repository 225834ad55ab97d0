"""2D world model: robot/sensor configurations, sector field of view, occlusion.

All positions are meters in a fixed world frame, all angles radians.
The sensor looks along ``heading + pan``; its field of view is a circular
sector (opening angle ``alpha``, radius ``radius``).  Occluders are line
segments; a point is visible only if the open segment from the sensor origin
to the point crosses no occluder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

TAU = 2.0 * math.pi

DEFAULT_BOUNDS = (-10.0, -10.0, 10.0, 10.0)  # 20 m x 20 m world


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    r = math.remainder(a, TAU)
    return math.pi if r <= -math.pi else r


def wrap_angles(a: np.ndarray) -> np.ndarray:
    """Vector version of wrap_angle; range [-pi, pi)."""
    return np.mod(np.asarray(a) + math.pi, TAU) - math.pi


def angle_diff(a: float, b: float) -> float:
    """Smallest signed difference a - b."""
    return wrap_angle(a - b)


@dataclass(frozen=True)
class RobotConfig:
    """Sensor platform configuration: base pose plus pan of the sensor head."""

    x: float
    y: float
    heading: float
    pan: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def view_direction(self) -> float:
        return wrap_angle(self.heading + self.pan)

    def as_vector(self) -> np.ndarray:
        """(x, y, heading, pan) for cost computations."""
        return np.array([self.x, self.y, self.heading, self.pan])


@dataclass(frozen=True)
class FovParams:
    """Sector field of view: opening angle (rad) and radius (m)."""

    alpha: float = math.pi / 3.0
    radius: float = 4.0

    def __post_init__(self):
        if not (0.0 < self.alpha < TAU):
            raise ValueError(f"fov opening angle must be in (0, 2*pi), got {self.alpha}")
        if self.radius <= 0.0:
            raise ValueError(f"fov radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Occluder:
    """A wall or box edge, blocking line of sight."""

    id: str
    a: tuple[float, float]
    b: tuple[float, float]

    @property
    def a_arr(self) -> np.ndarray:
        return np.array(self.a)

    @property
    def b_arr(self) -> np.ndarray:
        return np.array(self.b)


@dataclass(frozen=True)
class Human:
    id: str
    position: tuple[float, float]
    waypoint: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class TargetState:
    position: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    present: bool = True
    carrier: Optional[str] = None          # human id while being carried
    drop_position: Optional[tuple[float, float]] = None
    drop_time: Optional[float] = None      # scheduled automatic drop


@dataclass(frozen=True)
class WorldState:
    """Complete ground-truth state of the simulated scene at one instant."""

    robot: RobotConfig
    target: TargetState
    occluders: tuple[Occluder, ...] = ()
    humans: tuple[Human, ...] = ()
    time: float = 0.0

    def occluder_by_id(self, oid: str) -> Optional[Occluder]:
        for occ in self.occluders:
            if occ.id == oid:
                return occ
        return None

    def human_by_id(self, hid: str) -> Optional[Human]:
        for h in self.humans:
            if h.id == hid:
                return h
        return None


@dataclass(frozen=True)
class NavCommand:
    """Motion request: drive/turn toward a target configuration under limits."""

    target_config: RobotConfig
    max_speed: float = 0.6
    max_turn_rate: float = 1.5

    def __post_init__(self):
        if self.max_speed <= 0.0 or self.max_turn_rate <= 0.0:
            raise ValueError("speed limits must be positive")


# ---------------------------------------------------------------------------
# segment / visibility primitives
# ---------------------------------------------------------------------------

def _cross(ox: float, oy: float, ax: float, ay: float, bx: float, by: float) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def segments_cross(p0: np.ndarray, p1: np.ndarray, q0: np.ndarray, q1: np.ndarray) -> bool:
    """True iff the open segment p0-p1 properly crosses segment q0-q1.

    Touching at endpoints or collinear overlap does not count; the test is
    used for line-of-sight, where a grazing contact is treated as visible.
    """
    d1 = _cross(q0[0], q0[1], q1[0], q1[1], p0[0], p0[1])
    d2 = _cross(q0[0], q0[1], q1[0], q1[1], p1[0], p1[1])
    d3 = _cross(p0[0], p0[1], p1[0], p1[1], q0[0], q0[1])
    d4 = _cross(p0[0], p0[1], p1[0], p1[1], q1[0], q1[1])
    return (d1 * d2 < 0.0) and (d3 * d4 < 0.0)


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    closest = a + t * ab
    return float(np.hypot(*(p - closest)))


def ray_segment_distance(origin: np.ndarray, direction: np.ndarray,
                         a: np.ndarray, b: np.ndarray) -> Optional[float]:
    """Distance along a ray to its intersection with segment a-b, or None.

    ``direction`` need not be normalized; the return value is in units of its
    length.  Intersections behind the origin are ignored.
    """
    v = b - a
    denom = direction[0] * v[1] - direction[1] * v[0]
    if abs(denom) < 1e-15:
        return None
    w = a - origin
    t = (w[0] * v[1] - w[1] * v[0]) / denom
    u = (w[0] * direction[1] - w[1] * direction[0]) / denom
    if t <= 1e-12 or u < 0.0 or u > 1.0:
        return None
    return float(t)


def cast_ray(world: WorldState, origin: np.ndarray, bearing: float,
             max_range: float) -> float:
    """Range along a bearing until the first occluder, capped at max_range."""
    direction = np.array([math.cos(bearing), math.sin(bearing)])
    best = max_range
    for occ in world.occluders:
        t = ray_segment_distance(origin, direction, occ.a_arr, occ.b_arr)
        if t is not None and t < best:
            best = t
    return best


# ---------------------------------------------------------------------------
# field of view
# ---------------------------------------------------------------------------

def fov_contains(q: RobotConfig, f: FovParams, p) -> bool:
    """Sector membership test, ignoring occlusion.

    True iff p is within radius of the sensor and its bearing lies within
    +-alpha/2 of the view direction.  The sensor origin itself is contained.
    """
    p = np.asarray(p, dtype=float)
    d = p - q.position
    r = float(np.hypot(d[0], d[1]))
    if r > f.radius:
        return False
    if r == 0.0:
        return True
    bearing = math.atan2(d[1], d[0])
    return abs(angle_diff(bearing, q.view_direction)) <= f.alpha / 2.0 + 1e-12


def occluded(world: WorldState, q: RobotConfig, p) -> bool:
    """True iff some occluder blocks the open segment sensor -> p."""
    p = np.asarray(p, dtype=float)
    origin = q.position
    for occ in world.occluders:
        if segments_cross(origin, p, occ.a_arr, occ.b_arr):
            return True
    return False


def effective_fov_contains(world: WorldState, q: RobotConfig, f: FovParams, p) -> bool:
    """Sector membership minus occluded shadow regions."""
    return fov_contains(q, f, p) and not occluded(world, q, p)


def fov_mask(q: RobotConfig, f: FovParams, points: np.ndarray) -> np.ndarray:
    """Vectorized fov_contains over an (N, 2) array of points."""
    pts = np.asarray(points, dtype=float)
    d = pts - q.position
    r = np.hypot(d[:, 0], d[:, 1])
    bearings = np.arctan2(d[:, 1], d[:, 0])
    dang = np.abs(wrap_angles(bearings - q.view_direction))
    inside = (r <= f.radius) & ((dang <= f.alpha / 2.0 + 1e-12) | (r == 0.0))
    return inside


def occlusion_mask(world: WorldState, q: RobotConfig, points: np.ndarray) -> np.ndarray:
    """Vectorized occlusion test: True where the sight line is blocked."""
    pts = np.asarray(points, dtype=float)
    o = q.position
    blocked = np.zeros(len(pts), dtype=bool)
    for occ in world.occluders:
        a, b = occ.a_arr, occ.b_arr
        # sides of line a-b for the origin and for each point
        d1 = _cross(a[0], a[1], b[0], b[1], o[0], o[1])
        c2 = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        # sides of each sight line o-pt for the segment endpoints
        vx = pts[:, 0] - o[0]
        vy = pts[:, 1] - o[1]
        c3 = vx * (a[1] - o[1]) - vy * (a[0] - o[0])
        c4 = vx * (b[1] - o[1]) - vy * (b[0] - o[0])
        blocked |= (d1 * c2 < 0.0) & (c3 * c4 < 0.0)
    return blocked


def effective_fov_mask(world: WorldState, q: RobotConfig, f: FovParams,
                       points: np.ndarray) -> np.ndarray:
    return fov_mask(q, f, points) & ~occlusion_mask(world, q, points)


def effective_fov_area(world: WorldState, q: RobotConfig, f: FovParams,
                       n_rays: int = 256) -> float:
    """Area of the sector minus occluder shadows, by angular quadrature.

    Along each bearing the visible portion extends to the first occluder
    crossing (everything beyond is shadow), so the area integral is
    0.5 * integral of min(R, d_first(phi))^2 dphi, evaluated at n_rays
    midpoints.
    """
    if not world.occluders:
        return 0.5 * f.alpha * f.radius ** 2
    half = f.alpha / 2.0
    center = q.view_direction
    dphi = f.alpha / n_rays
    phis = center - half + (np.arange(n_rays) + 0.5) * dphi
    origin = q.position
    dx = np.cos(phis)
    dy = np.sin(phis)
    r_vis = np.full(n_rays, f.radius)
    for occ in world.occluders:
        a, b = occ.a_arr, occ.b_arr
        vx, vy = b[0] - a[0], b[1] - a[1]
        wx, wy = a[0] - origin[0], a[1] - origin[1]
        denom = dx * vy - dy * vx
        ok = np.abs(denom) > 1e-15
        t = np.where(ok, (wx * vy - wy * vx) / np.where(ok, denom, 1.0), np.inf)
        u = np.where(ok, (wx * dy - wy * dx) / np.where(ok, denom, 1.0), -1.0)
        hit = ok & (t > 1e-12) & (u >= 0.0) & (u <= 1.0)
        r_vis = np.where(hit & (t < r_vis), t, r_vis)
    return float(0.5 * dphi * np.sum(r_vis * r_vis))


def sample_point_in_effective_fov(world: WorldState, q: RobotConfig, f: FovParams,
                                  rng: np.random.Generator,
                                  max_attempts: int = 200) -> Optional[np.ndarray]:
    """Uniform draw over the visible sector via rejection; None if it fails."""
    half = f.alpha / 2.0
    center = q.view_direction
    origin = q.position
    for _ in range(max_attempts):
        phi = center + rng.uniform(-half, half)
        r = f.radius * math.sqrt(rng.uniform())
        p = origin + r * np.array([math.cos(phi), math.sin(phi)])
        if not occluded(world, q, p):
            return p
    return None


# ---------------------------------------------------------------------------
# kinematics
# ---------------------------------------------------------------------------

def _clamp_to_bounds(p: np.ndarray, bounds: Sequence[float]) -> np.ndarray:
    x0, y0, x1, y1 = bounds
    return np.array([min(max(p[0], x0), x1), min(max(p[1], y0), y1)])


def _segment_clearance(p: np.ndarray, occluders: Iterable[Occluder]) -> float:
    c = math.inf
    for occ in occluders:
        c = min(c, point_segment_distance(p, occ.a_arr, occ.b_arr))
    return c


def step_world(world: WorldState, cmd: NavCommand, dt: float,
               bounds: Sequence[float] = DEFAULT_BOUNDS,
               occluder_inflation: float = 0.0,
               pan_limit: float = math.pi / 2,
               human_speed: float = 0.8) -> WorldState:
    """Advance the world one step: deterministic kinematics, no randomness.

    The robot translates at most max_speed*dt toward the commanded position
    and rotates heading/pan at most max_turn_rate*dt toward the commanded
    angles.  A translation that would bring the base closer than
    ``occluder_inflation`` to an occluder is cancelled unless it increases
    clearance (so the robot can escape but not enter).  The target advances
    by its velocity (or rides its carrier), humans walk toward waypoints.
    """
    if not (isinstance(dt, (int, float)) and math.isfinite(dt)):
        raise ValueError(f"dt must be finite, got {dt!r}")
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")

    robot = world.robot
    goal = cmd.target_config

    # translation
    pos = robot.position
    delta = goal.position - pos
    dist = float(np.hypot(delta[0], delta[1]))
    if dist > 1e-12:
        step = min(cmd.max_speed * dt, dist)
        new_pos = pos + delta / dist * step
    else:
        new_pos = pos
    new_pos = _clamp_to_bounds(new_pos, bounds)
    if occluder_inflation > 0.0 and world.occluders:
        new_clear = _segment_clearance(new_pos, world.occluders)
        if new_clear < occluder_inflation:
            if new_clear <= _segment_clearance(pos, world.occluders):
                new_pos = pos

    # rotation: shortest direction, rate limited
    max_turn = cmd.max_turn_rate * dt
    dh = angle_diff(goal.heading, robot.heading)
    new_heading = wrap_angle(robot.heading + max(-max_turn, min(max_turn, dh)))
    dp = goal.pan - robot.pan
    new_pan = robot.pan + max(-max_turn, min(max_turn, dp))
    new_pan = max(-pan_limit, min(pan_limit, new_pan))

    new_robot = RobotConfig(float(new_pos[0]), float(new_pos[1]), new_heading, new_pan)

    # target
    tgt = world.target
    if tgt.carrier is not None:
        h = world.human_by_id(tgt.carrier)
        if h is not None:
            tgt = replace(tgt, position=h.position)
    elif tgt.present:
        p = np.asarray(tgt.position) + np.asarray(tgt.velocity) * dt
        clamped = _clamp_to_bounds(p, bounds)
        vel = tgt.velocity if np.allclose(p, clamped) else (0.0, 0.0)
        tgt = replace(tgt, position=(float(clamped[0]), float(clamped[1])), velocity=vel)

    # humans
    new_humans = []
    for h in world.humans:
        if h.waypoint is None:
            new_humans.append(h)
            continue
        hp = np.asarray(h.position)
        wp = np.asarray(h.waypoint)
        d = wp - hp
        gap = float(np.hypot(d[0], d[1]))
        if gap <= human_speed * dt:
            new_humans.append(Human(h.id, (float(wp[0]), float(wp[1])), None))
        else:
            np_ = hp + d / gap * human_speed * dt
            new_humans.append(Human(h.id, (float(np_[0]), float(np_[1])), h.waypoint))
    # a carried target tracks its (possibly moved) carrier
    if tgt.carrier is not None:
        for h in new_humans:
            if h.id == tgt.carrier:
                tgt = replace(tgt, position=h.position)

    return WorldState(
        robot=new_robot,
        target=tgt,
        occluders=world.occluders,
        humans=tuple(new_humans),
        time=world.time + dt,
    )
