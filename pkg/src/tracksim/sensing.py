"""Synthetic sensing: target detections and the binary context features.

Replaces a camera + recognition stack with a generative model driven by
ground truth.  A visible target is detected with probability ``p_d`` (plus
Gaussian position noise); when the target is not visible, a clutter
detection appears with probability ``p_e``, uniform over the visible sector.

Context observations are four binary features: target seen, occluder
overlapping the target's last known footprint, depth drop along the last
bearing, human in view.  Footprints are (angle interval x range interval)
boxes as seen from the sensor; an occluder's footprint extends in range from
its nearest surface out to the sensor radius, since everything behind the
surface is hidden by it.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import (
    FovParams,
    RobotConfig,
    WorldState,
    angle_diff,
    cast_ray,
    effective_fov_contains,
    point_segment_distance,
    ray_segment_distance,
    sample_point_in_effective_fov,
)


class DegenerateFootprint(ValueError):
    """Raised when an overlap ratio is requested against a zero-area box."""


@dataclass(frozen=True)
class Detection:
    """Either empty or a 2D position measurement."""

    value: Optional[tuple[float, float]] = None

    @property
    def empty(self) -> bool:
        return self.value is None

    def as_array(self) -> np.ndarray:
        if self.value is None:
            raise ValueError("empty detection has no value")
        return np.array(self.value)


EMPTY_DETECTION = Detection(None)


@dataclass(frozen=True)
class SensorParams:
    p_d: float = 0.9
    p_e: float = 0.05
    noise_cov: tuple[tuple[float, float], tuple[float, float]] = ((0.0025, 0.0), (0.0, 0.0025))
    depth_window: float = 1.0        # seconds of range history for the depth cue
    lambda_or: float = 0.5           # overlap ratio threshold
    lambda_depth: float = 0.3        # meters
    p_d_human: float = 0.95
    target_radius: float = 0.15      # physical footprint radii (m)
    human_radius: float = 0.25

    def __post_init__(self):
        if not (0.0 <= self.p_e < 1.0 and 0.0 < self.p_d <= 1.0 and self.p_e < self.p_d):
            raise ValueError("require 0 <= p_e < p_d <= 1")
        cov = np.asarray(self.noise_cov, dtype=float)
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
            raise ValueError("noise covariance must be symmetric 2x2")
        if np.any(np.linalg.eigvalsh(cov) <= 0.0):
            raise ValueError("noise covariance must be positive definite")
        if self.depth_window <= 0 or self.lambda_depth <= 0 or not (0.0 <= self.lambda_or <= 1.0):
            raise ValueError("invalid feature thresholds")

    @property
    def cov(self) -> np.ndarray:
        return np.asarray(self.noise_cov, dtype=float)


@dataclass(frozen=True)
class FeatureVector:
    """Binary context observation: (target, overlap, depth, human)."""

    target: int
    overlap: int
    depth: int
    human: int

    def __post_init__(self):
        for v in (self.target, self.overlap, self.depth, self.human):
            if v not in (0, 1):
                raise ValueError("feature components must be 0 or 1")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.target, self.overlap, self.depth, self.human)

    @property
    def symbol(self) -> int:
        """Index of this observation among the 16 possible vectors."""
        return self.target * 8 + self.overlap * 4 + self.depth * 2 + self.human

    @staticmethod
    def from_symbol(sym: int) -> "FeatureVector":
        return FeatureVector((sym >> 3) & 1, (sym >> 2) & 1, (sym >> 1) & 1, sym & 1)


# ---------------------------------------------------------------------------
# detection generator
# ---------------------------------------------------------------------------

def detect_target(world: WorldState, q: RobotConfig, f: FovParams,
                  params: SensorParams, rng: np.random.Generator) -> Detection:
    """One synthetic detector frame.

    Visible target: detection with prob p_d, position ~ N(target, cov).
    Otherwise: clutter with prob p_e, uniform over the visible sector.
    """
    tgt = world.target
    visible = tgt.present and effective_fov_contains(world, q, f, tgt.position)
    u = rng.uniform()
    if visible:
        if u < params.p_d:
            noise = rng.multivariate_normal(np.zeros(2), params.cov)
            p = np.asarray(tgt.position) + noise
            return Detection((float(p[0]), float(p[1])))
        return EMPTY_DETECTION
    if u < params.p_e:
        p = sample_point_in_effective_fov(world, q, f, rng)
        if p is None:
            return EMPTY_DETECTION
        return Detection((float(p[0]), float(p[1])))
    return EMPTY_DETECTION


def detect_humans(world: WorldState, q: RobotConfig, f: FovParams,
                  params: SensorParams, rng: np.random.Generator) -> list[tuple[str, tuple[float, float]]]:
    """Humans inside the visible sector, each reported with prob p_d_human."""
    found = []
    for h in world.humans:
        if effective_fov_contains(world, q, f, h.position):
            if rng.uniform() < params.p_d_human:
                found.append((h.id, h.position))
    return found


# ---------------------------------------------------------------------------
# footprints and overlap
# ---------------------------------------------------------------------------

Footprint = tuple[tuple[float, float], tuple[float, float]]  # (angle interval, range interval)


def disc_footprint(q: RobotConfig, center, radius: float) -> Optional[Footprint]:
    """Angular x range box of a disc-shaped entity seen from the sensor."""
    c = np.asarray(center, dtype=float)
    d = c - q.position
    dist = float(np.hypot(d[0], d[1]))
    if dist <= radius:
        return None  # sensor inside the entity; no meaningful footprint
    bearing = math.atan2(d[1], d[0])
    half = math.asin(min(1.0, radius / dist))
    return ((bearing - half, bearing + half), (dist - radius, dist + radius))


def occluder_footprint(q: RobotConfig, a, b, max_range: float) -> Optional[Footprint]:
    """Blocking box of a wall segment: angular span x [nearest surface, R].

    The range interval runs out to the sensor radius because the wall hides
    everything behind it; this is what makes a closer wall "cover" a farther
    target footprint, mirroring overlapping image boxes.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da = a - q.position
    db = b - q.position
    ra = float(np.hypot(da[0], da[1]))
    rb = float(np.hypot(db[0], db[1]))
    if ra < 1e-9 or rb < 1e-9:
        return None
    ba = math.atan2(da[1], da[0])
    bb = math.atan2(db[1], db[0])
    spread = angle_diff(bb, ba)
    lo, hi = (ba, ba + spread) if spread >= 0 else (ba + spread, ba)
    near = point_segment_distance(q.position, a, b)
    if near >= max_range:
        return None
    return ((lo, hi), (near, max_range))


def overlap_ratio(bb_i: Footprint, bb_j: Footprint) -> float:
    """area(bb_j intersect bb_i) / area(bb_i), angles compared modulo 2*pi."""
    (ai0, ai1), (ri0, ri1) = bb_i
    (aj0, aj1), (rj0, rj1) = bb_j
    wa_i = ai1 - ai0
    wr_i = ri1 - ri0
    if wa_i <= 0.0 or wr_i <= 0.0:
        raise DegenerateFootprint(f"reference footprint has zero area: {bb_i}")
    # re-center the candidate's angular interval near the reference's center
    ci = 0.5 * (ai0 + ai1)
    cj = ci + angle_diff(0.5 * (aj0 + aj1), ci)
    hj = 0.5 * (aj1 - aj0)
    a_olap = max(0.0, min(ai1, cj + hj) - max(ai0, cj - hj))
    r_olap = max(0.0, min(ri1, rj1) - max(ri0, rj0))
    return (a_olap * r_olap) / (wa_i * wr_i)


# ---------------------------------------------------------------------------
# detection history and feature extraction
# ---------------------------------------------------------------------------

@dataclass
class HistoryEntry:
    t: float
    detected: bool
    position: Optional[tuple[float, float]] = None
    range_: Optional[float] = None
    bearing: Optional[float] = None
    stable: bool = False


class DetectionHistory:
    """Bounded per-frame record of detections, ranges and bearings.

    A detection is *stable* once it ends ``stable_streak`` consecutive,
    spatially consistent detections (each within ``gate_radius`` of the
    previous frame's).  Isolated clutter hits, or a clutter hit butting onto
    a real streak from far away, never become stable, so cues derived from
    the history cannot be hijacked by false detections.  The most recent
    stable detection is kept even after its frame ages out of the window.
    """

    def __init__(self, horizon: float = 5.0, stable_streak: int = 3,
                 gate_radius: float = 0.8):
        self.horizon = horizon
        self.stable_streak = stable_streak
        self.gate_radius = gate_radius
        self.entries: deque[HistoryEntry] = deque()
        self.last_stable: Optional[HistoryEntry] = None
        self.streak = 0

    def push(self, t: float, z: Detection, q: RobotConfig) -> None:
        if z.empty:
            self.streak = 0
            self.entries.append(HistoryEntry(t, False))
        else:
            prev = self.entries[-1] if self.entries else None
            if (prev is not None and prev.detected
                    and math.hypot(z.value[0] - prev.position[0],
                                   z.value[1] - prev.position[1]) <= self.gate_radius):
                self.streak += 1
            else:
                self.streak = 1
            d = z.as_array() - q.position
            entry = HistoryEntry(
                t, True, z.value,
                range_=float(np.hypot(d[0], d[1])),
                bearing=math.atan2(d[1], d[0]),
                stable=self.streak >= self.stable_streak,
            )
            self.entries.append(entry)
            if entry.stable:
                self.last_stable = entry
        while self.entries and self.entries[0].t < t - self.horizon:
            self.entries.popleft()

    def span(self, now: float) -> float:
        if not self.entries:
            return 0.0
        return now - self.entries[0].t

    def last_detection(self) -> Optional[HistoryEntry]:
        for e in reversed(self.entries):
            if e.detected:
                return e
        return None

    def mean_range(self, now: float, window: float) -> Optional[float]:
        ranges = [e.range_ for e in self.entries
                  if e.stable and e.t >= now - window]
        if not ranges:
            return None
        return float(np.mean(ranges))


@dataclass(frozen=True)
class SensedCues:
    """Side information produced while extracting features."""

    humans: tuple[tuple[str, tuple[float, float]], ...] = ()
    occluder_id: Optional[str] = None
    occluder_point: Optional[tuple[float, float]] = None  # blocking point on the wall
    best_overlap: float = 0.0
    current_range: Optional[float] = None


def extract_features(world: WorldState, q: RobotConfig, f: FovParams,
                     z: Detection, history: DetectionHistory,
                     params: SensorParams,
                     rng: np.random.Generator) -> tuple[FeatureVector, SensedCues]:
    """Compute the 4-bit context observation for the current frame.

    overlap: some occluder's blocking box covers more than lambda_or of the
    target's last-seen footprint while the detector returns nothing.
    depth: the range now measured along the last target bearing is shorter
    than the recent average detection range by more than lambda_depth
    (requires at least depth_window of history).
    human: a human is in the visible sector and the per-frame human detector
    fires (consumes randomness from rng).
    """
    theta_target = 0 if z.empty else 1

    theta_or = 0
    theta_depth = 0
    best_or = 0.0
    occ_id = None
    occ_point = None
    current_range = None

    last = history.last_stable
    if last is not None and z.empty:
        target_bb = disc_footprint(q, last.position, params.target_radius)
        if target_bb is not None:
            for occ in world.occluders:
                bb = occluder_footprint(q, occ.a, occ.b, f.radius)
                if bb is None:
                    continue
                ratio = overlap_ratio(target_bb, bb)
                if ratio > best_or:
                    best_or = ratio
                    occ_id = occ.id
            if best_or > params.lambda_or:
                theta_or = 1
        # depth drop along the bearing where the target was last seen
        d = np.asarray(last.position) - q.position
        bearing = math.atan2(d[1], d[0])
        current_range = cast_ray(world, q.position, bearing, f.radius)
        if history.span(world.time) >= params.depth_window:
            mean_r = history.mean_range(world.time, params.depth_window)
            if mean_r is not None and (mean_r - current_range) > params.lambda_depth:
                theta_depth = 1

    if occ_id is not None:
        occ = world.occluder_by_id(occ_id)
        if occ is not None and last is not None:
            d = np.asarray(last.position) - q.position
            bearing = math.atan2(d[1], d[0])
            direction = np.array([math.cos(bearing), math.sin(bearing)])
            t = ray_segment_distance(q.position, direction, occ.a_arr, occ.b_arr)
            if t is not None:
                p = q.position + t * direction
                occ_point = (float(p[0]), float(p[1]))
            else:
                mid = 0.5 * (occ.a_arr + occ.b_arr)
                occ_point = (float(mid[0]), float(mid[1]))

    humans = detect_humans(world, q, f, params, rng)
    theta_human = 1 if humans else 0

    features = FeatureVector(theta_target, theta_or, theta_depth, theta_human)
    cues = SensedCues(
        humans=tuple(humans),
        occluder_id=occ_id,
        occluder_point=occ_point,
        best_overlap=best_or,
        current_range=current_range,
    )
    return features, cues
