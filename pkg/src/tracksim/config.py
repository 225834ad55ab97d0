"""Run configuration: one structure holding every tunable default.

Values load from a YAML mapping (any subset can be overridden; unknown keys
are rejected) and validate on construction.  Scenario scripts may embed a
``config`` section with the same schema, merged on top of the base config.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .geometry import DEFAULT_BOUNDS, FovParams
from .particle_filter import ContextModelParams
from .pomdp import PomdpTables
from .sensing import SensorParams
from .view_planning import UtilityParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorldParams:
    bounds: tuple[float, float, float, float] = DEFAULT_BOUNDS
    dt: float = 0.1
    occluder_inflation: float = 0.3
    human_speed: float = 0.8
    pan_limit: float = math.pi / 2

    def __post_init__(self):
        x0, y0, x1, y1 = self.bounds
        if not (x0 < x1 and y0 < y1):
            raise ConfigError("world bounds must be a nonempty box")
        if self.dt <= 0.0 or not math.isfinite(self.dt):
            raise ConfigError("dt must be positive and finite")


@dataclass(frozen=True)
class FilterParams:
    n_particles: int = 2000
    neff_threshold: float = 0.5
    regen_max_attempts: int = 50
    context: ContextModelParams = field(default_factory=ContextModelParams)

    def __post_init__(self):
        if self.n_particles < 1:
            raise ConfigError("need at least one particle")
        if not (0.0 < self.neff_threshold <= 1.0):
            raise ConfigError("neff threshold must be in (0, 1]")


@dataclass(frozen=True)
class AgentParams:
    track_budget: int = 50        # ticks
    active_move_budget: int = 150
    search_budget: int = 300
    k_conf: int = 3               # consecutive detections to confirm contact
    detection_gate: float = 0.8   # max frame-to-frame jump (m) within a streak
    sweep_rate: float = 0.5       # rad/s during search
    arrival_pos_tol: float = 0.2
    arrival_ang_tol: float = 0.1
    detection_timeout: float = 60.0   # seconds to irrecoverable
    blocked_tick_limit: int = 15
    arrive_grace: int = 15            # ticks at the goal without contact before giving up
    human_standoff: float = 1.2
    max_speed: float = 0.6
    max_turn_rate: float = 1.5
    velocity_window: float = 0.5  # max age of the two detections for the velocity cue

    def __post_init__(self):
        if min(self.track_budget, self.active_move_budget, self.search_budget) < 1:
            raise ConfigError("action budgets must be positive")
        if self.k_conf < 1 or self.detection_timeout <= 0:
            raise ConfigError("invalid confirmation/timeout settings")


@dataclass(frozen=True)
class HarnessParams:
    trace_particles: int = 64      # particle points serialized per trace record
    snapshot_particles: int = 500  # particle points in live snapshots (<= 1000)
    snapshot_every: int = 2        # broadcast every n-th tick
    loss_gap: float = 1.5          # seconds without confirmation that opens a loss episode

    def __post_init__(self):
        if not (0 <= self.trace_particles <= 1000 and 0 <= self.snapshot_particles <= 1000):
            raise ConfigError("particle decimation counts must be in [0, 1000]")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot cadence must be >= 1")


@dataclass(frozen=True)
class SimConfig:
    world: WorldParams = field(default_factory=WorldParams)
    fov: FovParams = field(default_factory=FovParams)
    sensor: SensorParams = field(default_factory=SensorParams)
    filter: FilterParams = field(default_factory=FilterParams)
    pomdp: PomdpTables = field(default_factory=PomdpTables)
    utility: UtilityParams = field(default_factory=UtilityParams)
    agent: AgentParams = field(default_factory=AgentParams)
    harness: HarnessParams = field(default_factory=HarnessParams)


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def _current_fields(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def _as_tuple(v):
    return tuple(v) if isinstance(v, list) else v


def _normalize(section: str, merged: dict) -> dict:
    """Convert YAML-friendly forms into the shapes the dataclasses expect."""
    if section == "sensor" and "sigma" in merged:
        s = float(merged.pop("sigma"))
        merged["noise_cov"] = ((s * s, 0.0), (0.0, s * s))
    if section == "sensor" and isinstance(merged.get("noise_cov"), list):
        c = np.asarray(merged["noise_cov"], dtype=float)
        merged["noise_cov"] = tuple(tuple(row) for row in c.tolist())
    if section == "pomdp":
        for key in ("transitions", "feature_likelihoods", "rewards"):
            if key in merged and not isinstance(merged[key], np.ndarray):
                merged[key] = np.asarray(merged[key], dtype=float)
    for key in ("bounds", "q_diag"):
        if key in merged:
            merged[key] = _as_tuple(merged[key])
    return merged


_SECTION_TYPES = {
    "world": WorldParams,
    "fov": FovParams,
    "sensor": SensorParams,
    "filter": FilterParams,
    "pomdp": PomdpTables,
    "utility": UtilityParams,
    "agent": AgentParams,
    "harness": HarnessParams,
}


def apply_overrides(config: SimConfig, overrides: Optional[dict]) -> SimConfig:
    """Return a new SimConfig with a nested override mapping applied."""
    if not overrides:
        return config
    if not isinstance(overrides, dict):
        raise ConfigError(f"config overrides must be a mapping, got {type(overrides).__name__}")
    updates: dict[str, Any] = {}
    for section, value in overrides.items():
        if section not in _SECTION_TYPES:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(value, dict):
            raise ConfigError(f"config section {section!r} must be a mapping")
        base = getattr(config, section)
        value = dict(value)
        if section == "filter" and "context" in value:
            ctx = ContextModelParams(**{**_current_fields(base.context), **value.pop("context")})
            value["context"] = ctx
        merged = _normalize(section, {**_current_fields(base), **value})
        try:
            updates[section] = _SECTION_TYPES[section](**merged)
        except TypeError as e:
            raise ConfigError(f"bad keys in section {section!r}: {e}") from e
        except ValueError as e:
            raise ConfigError(f"invalid values in section {section!r}: {e}") from e
    return replace(config, **updates)


def load_config(path: str | Path) -> SimConfig:
    """Load a YAML config file on top of the built-in defaults."""
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a mapping")
    return apply_overrides(SimConfig(), data)


def config_to_dict(config: SimConfig) -> dict:
    """Plain-JSON view of a config (numpy arrays become nested lists)."""
    def convert(v):
        if isinstance(v, np.ndarray):
            return v.tolist()
        if isinstance(v, tuple):
            return [convert(x) for x in v]
        if isinstance(v, dict):
            return {k: convert(x) for k, x in v.items()}
        return v
    return {k: convert(v) for k, v in asdict(config).items()}
