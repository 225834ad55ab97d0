"""Sensor configuration selection by sampled utility maximization.

Candidates are sampled around the current configuration and scored by
J = information_gain - travel_cost - perception_cost, where travel cost is
a weighted quadratic in the configuration change and perception cost is the
squared distance between the candidate base and the current target estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .geometry import (
    DEFAULT_BOUNDS,
    FovParams,
    RobotConfig,
    WorldState,
    point_segment_distance,
    wrap_angles,
)
from .particle_filter import ParticleSet, information_gain


@dataclass(frozen=True)
class UtilityParams:
    travel_weight: float = 0.1       # beta
    perception_weight: float = 0.05  # gamma
    q_diag: tuple[float, float, float, float] = (1.0, 1.0, 0.2, 0.1)
    n_samples: int = 64
    sample_radius: float = 2.5
    pan_limit: float = math.pi / 2
    clearance: float = 0.3           # min distance from occluders for candidates
    bounds: tuple[float, float, float, float] = DEFAULT_BOUNDS

    def __post_init__(self):
        if self.travel_weight < 0.0 or self.perception_weight < 0.0:
            raise ValueError("cost weights must be nonnegative")
        if any(v < 0.0 for v in self.q_diag):
            raise ValueError("travel weighting matrix must be PSD")
        if self.n_samples < 1 or self.sample_radius < 0.0:
            raise ValueError("invalid sampling parameters")


def _collision_free(p: np.ndarray, occluders, clearance: float) -> bool:
    for occ in occluders:
        if point_segment_distance(p, occ.a_arr, occ.b_arr) < clearance:
            return False
    return True


def sample_candidates(q_now: RobotConfig, world: WorldState,
                      params: UtilityParams,
                      rng: np.random.Generator) -> list[RobotConfig]:
    """n_samples candidate configurations; q_now is always the first entry.

    Positions are uniform in a disc around the current base (rejecting
    those too close to an occluder or out of bounds); headings and pans are
    uniform over their ranges.
    """
    out = [q_now]
    x0, y0, x1, y1 = params.bounds
    for _ in range(params.n_samples - 1):
        ang = rng.uniform(-math.pi, math.pi)
        rad = params.sample_radius * math.sqrt(rng.uniform())
        p = q_now.position + rad * np.array([math.cos(ang), math.sin(ang)])
        heading = rng.uniform(-math.pi, math.pi)
        pan = rng.uniform(-params.pan_limit, params.pan_limit)
        if not (x0 <= p[0] <= x1 and y0 <= p[1] <= y1):
            continue
        if not _collision_free(p, world.occluders, params.clearance):
            continue
        out.append(RobotConfig(float(p[0]), float(p[1]), heading, pan))
    return out


def travel_cost(q_from: RobotConfig, q_to: RobotConfig,
                params: UtilityParams) -> float:
    """Quadratic configuration-change cost with wrapped angle differences."""
    d = q_to.as_vector() - q_from.as_vector()
    d[2:] = wrap_angles(d[2:])
    q = np.asarray(params.q_diag)
    return float(d @ (q * d))


def utility(x_hat: np.ndarray, q_now: RobotConfig, q_cand: RobotConfig,
            ps: ParticleSet, params: UtilityParams, world: WorldState,
            fov: FovParams) -> float:
    """J = gain - travel_weight * travel - perception_weight * |x_hat - base|^2."""
    ig = information_gain(ps, q_cand, fov, world)
    travel = params.travel_weight * travel_cost(q_now, q_cand, params)
    gap = np.asarray(x_hat, dtype=float) - q_cand.position
    perception = params.perception_weight * float(gap @ gap)
    return ig - travel - perception


def select_best(candidates: list[RobotConfig], x_hat: np.ndarray,
                q_now: RobotConfig, ps: ParticleSet, params: UtilityParams,
                world: WorldState, fov: FovParams) -> tuple[RobotConfig, list[float]]:
    """Argmax-J candidate; ties go to the smaller travel cost, then list order."""
    if not candidates:
        raise ValueError("candidate list must be non-empty")
    scores = []
    best_i = 0
    best_j = -math.inf
    best_travel = math.inf
    for i, cand in enumerate(candidates):
        j = utility(x_hat, q_now, cand, ps, params, world, fov)
        scores.append(j)
        t = travel_cost(q_now, cand, params)
        if j > best_j or (j == best_j and t < best_travel):
            best_i, best_j, best_travel = i, j, t
    return candidates[best_i], scores
