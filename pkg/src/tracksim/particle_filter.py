"""Particle filter over the target position, driven by the context belief.

Prediction redraws every particle from a belief-weighted Gaussian mixture
whose components are supplied per context (visible / occluded / taken-away);
the measurement update applies the four-branch sensor likelihood, and
systematic resampling regenerates weight that would otherwise collapse
inside an empty-measurement view.

Entropy and per-view information gain are computed from particle weights:
H = -sum w log w, and the gain of a candidate view is the share of that sum
carried by particles the view would observe.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .geometry import (
    DEFAULT_BOUNDS,
    FovParams,
    RobotConfig,
    WorldState,
    effective_fov_area,
    effective_fov_mask,
)
from .pomdp import ContextState
from .sensing import Detection, SensorParams


class FilterDivergence(RuntimeError):
    """All particle weights vanished; the estimate no longer explains data."""


class PredictionUnavailable(RuntimeError):
    """No context component can be built for any context with belief mass."""


class MissingCue(ValueError):
    """A context component was requested without its required world cue."""


@dataclass(frozen=True)
class Particle:
    x: tuple[float, float]
    w: float


@dataclass
class ParticleSet:
    """Weighted hypotheses: positions (N, 2) and normalized weights (N,)."""

    xs: np.ndarray
    ws: np.ndarray

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ws = np.asarray(self.ws, dtype=float)
        if self.xs.ndim != 2 or self.xs.shape[1] != 2 or self.xs.shape[0] != self.ws.shape[0]:
            raise ValueError("particle arrays must be (N, 2) and (N,)")

    @property
    def n(self) -> int:
        return len(self.ws)

    def particle(self, i: int) -> Particle:
        return Particle((float(self.xs[i, 0]), float(self.xs[i, 1])), float(self.ws[i]))

    def normalized(self, tol: float = 1e-9) -> bool:
        return bool(abs(float(self.ws.sum()) - 1.0) <= tol and np.all(self.ws >= 0.0))

    def n_eff(self) -> float:
        s = float(self.ws @ self.ws)
        return 1.0 / s if s > 0.0 else 0.0

    def mean(self) -> np.ndarray:
        return self.ws @ self.xs

    def copy(self) -> "ParticleSet":
        return ParticleSet(self.xs.copy(), self.ws.copy())


def init_uniform(n: int, rng: np.random.Generator,
                 bounds=DEFAULT_BOUNDS) -> ParticleSet:
    x0, y0, x1, y1 = bounds
    xs = rng.uniform([x0, y0], [x1, y1], size=(n, 2))
    return ParticleSet(xs, np.full(n, 1.0 / n))


# ---------------------------------------------------------------------------
# context prediction components
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContextModelParams:
    sigma_visible: float = 0.2
    sigma_occluded: float = 0.5
    sigma_human: float = 0.7
    occluder_offset: float = 0.5   # pushed behind the blocking point, along the sight line

    def __post_init__(self):
        if min(self.sigma_visible, self.sigma_occluded, self.sigma_human,
               self.occluder_offset) <= 0.0:
            raise ValueError("context model parameters must be positive")


class GaussComponent(NamedTuple):
    mean: np.ndarray
    sigma: float  # isotropic std


def context_component(c: ContextState,
                      params: ContextModelParams,
                      last_state: Optional[tuple[np.ndarray, np.ndarray]] = None,
                      occluder_point: Optional[np.ndarray] = None,
                      sensor_origin: Optional[np.ndarray] = None,
                      human_position: Optional[np.ndarray] = None,
                      dt: float = 0.1) -> Optional[GaussComponent]:
    """Gaussian prediction component for one context, or None (irrecoverable).

    visible:    N(x + v*dt, sigma_visible^2 I) from the last target state
    occluded:   N(blocking point + offset along the sight line, sigma_occluded^2 I)
    disappearance: N(human position, sigma_human^2 I)
    """
    if c == ContextState.VISIBLE:
        if last_state is None:
            raise MissingCue("visible component needs the last target state")
        x, v = last_state
        return GaussComponent(np.asarray(x, dtype=float) + np.asarray(v, dtype=float) * dt,
                              params.sigma_visible)
    if c == ContextState.OCCLUDED:
        if occluder_point is None or sensor_origin is None:
            raise MissingCue("occluded component needs the occluder blocking point")
        p = np.asarray(occluder_point, dtype=float)
        d = p - np.asarray(sensor_origin, dtype=float)
        norm = float(np.hypot(d[0], d[1]))
        unit = d / norm if norm > 1e-12 else np.array([1.0, 0.0])
        return GaussComponent(p + params.occluder_offset * unit, params.sigma_occluded)
    if c == ContextState.DISAPPEARANCE:
        if human_position is None:
            raise MissingCue("disappearance component needs a human position")
        return GaussComponent(np.asarray(human_position, dtype=float), params.sigma_human)
    if c == ContextState.IRRECOVERABLE:
        return None
    raise ValueError(f"unknown context state {c!r}")


def sample_mixture(weights: np.ndarray, means: np.ndarray, sigmas: np.ndarray,
                   n: int, rng: np.random.Generator) -> np.ndarray:
    """n samples from a mixture of isotropic Gaussians; means is (k, d)."""
    weights = np.asarray(weights, dtype=float)
    means = np.asarray(means, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    idx = rng.choice(len(weights), size=n, p=weights / weights.sum())
    return means[idx] + rng.standard_normal((n, means.shape[1])) * sigmas[idx, None]


def predict(ps: ParticleSet,
            belief,
            components: dict[ContextState, Optional[GaussComponent]],
            rng: np.random.Generator) -> ParticleSet:
    """Redraw each particle from the belief-weighted mixture of components.

    Contexts without an available component are dropped and the remaining
    belief mass renormalized; weights are left unchanged.
    """
    probs = np.asarray(getattr(belief, "probs", belief), dtype=float)
    avail = [(c, comp) for c, comp in components.items()
             if comp is not None and probs[int(c)] > 0.0]
    if not avail:
        raise PredictionUnavailable("no context component available for prediction")
    w = np.array([probs[int(c)] for c, _ in avail])
    means = np.stack([comp.mean for _, comp in avail])
    sigmas = np.array([comp.sigma for _, comp in avail])
    xs = sample_mixture(w, means, sigmas, ps.n, rng)
    return ParticleSet(xs, ps.ws.copy())


# ---------------------------------------------------------------------------
# measurement update
# ---------------------------------------------------------------------------

def gaussian_density(delta: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Multivariate normal density at offsets delta, shape (N, d)."""
    delta = np.atleast_2d(delta)
    d = delta.shape[1]
    inv = np.linalg.inv(cov)
    det = float(np.linalg.det(cov))
    norm = 1.0 / math.sqrt(((2.0 * math.pi) ** d) * det)
    quad = np.einsum("ni,ij,nj->n", delta, inv, delta)
    return norm * np.exp(-0.5 * quad)


def measurement_factors(positions: np.ndarray, inside: np.ndarray,
                        z_value: Optional[np.ndarray],
                        p_d: float, p_e: float,
                        cov: np.ndarray, clutter_density: float) -> np.ndarray:
    """Per-particle likelihood factors for one detector frame.

    Empty frame: (1 - p_d) for particles in view, (1 - p_e) outside.
    Detection:   p_d * N(z; x, cov) in view, p_e * clutter density outside.
    Dimension-agnostic: positions may be (N, 1) or (N, 2).
    """
    if z_value is None:
        return np.where(inside, 1.0 - p_d, 1.0 - p_e)
    dens = gaussian_density(positions - np.asarray(z_value, dtype=float), cov)
    return np.where(inside, p_d * dens, p_e * clutter_density)


def update(ps: ParticleSet, z: Detection, world: WorldState, q: RobotConfig,
           f: FovParams, params: SensorParams) -> ParticleSet:
    """Reweight particles by the sensor model and renormalize.

    Raises FilterDivergence when the total reweighted mass underflows; the
    caller is expected to reinitialize.
    """
    inside = effective_fov_mask(world, q, f, ps.xs)
    if z.empty:
        factors = measurement_factors(ps.xs, inside, None, params.p_d, params.p_e,
                                      params.cov, 0.0)
    else:
        area = effective_fov_area(world, q, f)
        clutter = 1.0 / max(area, 1e-9)
        factors = measurement_factors(ps.xs, inside, z.as_array(), params.p_d,
                                      params.p_e, params.cov, clutter)
    raw = ps.ws * factors
    total = float(raw.sum())
    if not math.isfinite(total) or total <= 0.0:
        raise FilterDivergence("measurement update produced zero total weight")
    return ParticleSet(ps.xs.copy(), raw / total)


# ---------------------------------------------------------------------------
# resampling
# ---------------------------------------------------------------------------

def systematic_resample(ws: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Low-variance resampling; returns selected indices."""
    n = len(ws)
    positions = (rng.uniform() + np.arange(n)) / n
    cumulative = np.cumsum(ws)
    cumulative[-1] = 1.0  # guard against roundoff
    return np.searchsorted(cumulative, positions)


@dataclass(frozen=True)
class RegenParams:
    """How to regenerate particles that resample into an unseen region."""

    enabled: bool = False   # only meaningful after an empty measurement
    mixture_weights: Optional[np.ndarray] = None
    mixture_means: Optional[np.ndarray] = None
    mixture_sigmas: Optional[np.ndarray] = None
    bounds: tuple[float, float, float, float] = DEFAULT_BOUNDS
    max_attempts: int = 50


class ResampleResult(NamedTuple):
    particles: ParticleSet
    resampled: bool
    regenerated: int
    fallback_uniform: int


def resample(ps: ParticleSet, world: WorldState, q: RobotConfig, f: FovParams,
             regen: RegenParams, rng: np.random.Generator,
             neff_threshold: float = 0.5) -> ResampleResult:
    """Systematic resampling with out-of-view regeneration.

    Triggers when n_eff falls below neff_threshold * N.  After an empty
    measurement, copies that land inside the visible sector carry almost no
    information, so they are redrawn from the prediction mixture restricted
    to the sector's exterior (rejection sampling, with a uniform fallback
    flagged in the result).  All weights end at 1/N.
    """
    n = ps.n
    if ps.n_eff() >= neff_threshold * n:
        return ResampleResult(ps, False, 0, 0)
    idx = systematic_resample(ps.ws, rng)
    xs = ps.xs[idx].copy()
    regenerated = 0
    fallback = 0
    if regen.enabled and regen.mixture_means is not None and len(regen.mixture_means):
        inside = effective_fov_mask(world, q, f, xs)
        need = np.flatnonzero(inside)
        if len(need):
            replacements = np.empty((len(need), 2))
            got = 0
            for _ in range(regen.max_attempts):
                if got >= len(need):
                    break
                batch = sample_mixture(regen.mixture_weights, regen.mixture_means,
                                       regen.mixture_sigmas,
                                       max(64, 2 * (len(need) - got)), rng)
                ok = batch[~effective_fov_mask(world, q, f, batch)]
                take = min(len(ok), len(need) - got)
                if take:
                    replacements[got:got + take] = ok[:take]
                    got += take
            # uniform fallback outside the view for whatever is still missing
            x0, y0, x1, y1 = regen.bounds
            for _ in range(regen.max_attempts):
                if got >= len(need):
                    break
                batch = rng.uniform([x0, y0], [x1, y1], size=(2 * (len(need) - got), 2))
                ok = batch[~effective_fov_mask(world, q, f, batch)]
                take = min(len(ok), len(need) - got)
                if take:
                    replacements[got:got + take] = ok[:take]
                    got += take
                    fallback += take
            xs[need[:got]] = replacements[:got]
            regenerated = int(got)
    return ResampleResult(ParticleSet(xs, np.full(n, 1.0 / n)), True, regenerated, fallback)


# ---------------------------------------------------------------------------
# uncertainty measures
# ---------------------------------------------------------------------------

def entropy(ps: ParticleSet) -> float:
    """Shannon entropy of the weight vector in nats, with 0*log(0) = 0."""
    w = ps.ws[ps.ws > 0.0]
    return float(-(w * np.log(w)).sum())


def information_gain(ps: ParticleSet, q_cand: RobotConfig, f: FovParams,
                     world: WorldState) -> float:
    """Entropy mass a candidate view would resolve: -sum_{in view} w log w."""
    inside = effective_fov_mask(world, q_cand, f, ps.xs)
    w = ps.ws[inside & (ps.ws > 0.0)]
    if len(w) == 0:
        return 0.0
    return float(-(w * np.log(w)).sum())
