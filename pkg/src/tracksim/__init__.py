"""tracksim: a deterministic 2D active object tracking simulator.

Core pipeline: sector-FOV world model, synthetic sensing, context-driven
particle filtering, information-gain view planning, and a discrete belief
planner over tracking contexts, wrapped in a scenario harness and a live
session server for human-driven adversarial events.
"""

__version__ = "0.1.0"

PROTOCOL_VERSION = 1

from .geometry import (  # noqa: F401
    FovParams,
    Human,
    NavCommand,
    Occluder,
    RobotConfig,
    TargetState,
    WorldState,
    effective_fov_contains,
    fov_contains,
    step_world,
)
from .sensing import (  # noqa: F401
    Detection,
    FeatureVector,
    SensorParams,
    detect_target,
    extract_features,
    overlap_ratio,
)
from .particle_filter import (  # noqa: F401
    ContextModelParams,
    FilterDivergence,
    ParticleSet,
    context_component,
    entropy,
    information_gain,
    predict,
    resample,
    update,
)
from .pomdp import (  # noqa: F401
    ContextBelief,
    ContextState,
    HlAction,
    PomdpTables,
    belief_predict,
    belief_update,
    observation_likelihood,
    plan,
    reward,
)
from .view_planning import UtilityParams, sample_candidates, select_best, utility  # noqa: F401
from .config import SimConfig, load_config  # noqa: F401
from .scenario import ScenarioScript, load_script  # noqa: F401
from .harness import Simulation, run_batch, run_trial  # noqa: F401
from .metrics import TrialMetrics, compute_metrics  # noqa: F401
