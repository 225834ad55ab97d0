"""The agent loop: sense, filter, maintain the context belief, act.

High-level actions run as multi-tick executors.  While an executor is
active the belief sees only observation updates; when it completes or fails
the belief is pushed through the transition table for that action, re-fed
the current observation, and the planner picks the next action.

Contact bookkeeping uses a streak of consecutive detections (k_conf in a
row confirms contact); the irrecoverable timeout runs from the last
confirmed contact so that clutter blips cannot keep a lost trial alive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import SimConfig
from .geometry import (
    NavCommand,
    RobotConfig,
    WorldState,
    angle_diff,
    wrap_angle,
)
from .particle_filter import (
    FilterDivergence,
    GaussComponent,
    ParticleSet,
    PredictionUnavailable,
    RegenParams,
    context_component,
    entropy,
    init_uniform,
    predict,
    resample,
    update,
)
from .pomdp import (
    BeliefUpdateError,
    ContextBelief,
    ContextState,
    HlAction,
    belief_predict,
    belief_update,
    plan,
)
from .sensing import Detection, DetectionHistory, detect_target, extract_features
from .view_planning import sample_candidates, select_best

PHASE_ACTIVE = "active"
PHASE_COMPLETE = "complete"
PHASE_FAILED = "failed"
PHASE_TERMINAL = "terminal"


@dataclass
class ActionExecution:
    action: HlAction
    budget: int
    phase: str = PHASE_ACTIVE
    ticks_elapsed: int = 0
    detection_streak: int = 0
    # active-move state
    goal: Optional[RobotConfig] = None
    blocked_ticks: int = 0
    arrived_ticks: int = 0
    last_position: Optional[tuple[float, float]] = None
    # search state
    approach: Optional[tuple[float, float]] = None
    sweep_sign: float = 1.0


@dataclass
class AgentState:
    belief: ContextBelief
    particles: ParticleSet
    execution: ActionExecution
    history: DetectionHistory
    last_detection: Optional[tuple[float, tuple[float, float]]] = None  # (t, pos)
    velocity_estimate: tuple[float, float] = (0.0, 0.0)
    last_occluder: Optional[tuple[str, tuple[float, float]]] = None     # (id, blocking point)
    last_human: Optional[tuple[float, tuple[float, float]]] = None      # (t, pos)
    last_confirmed_t: float = 0.0
    consecutive_detections: int = 0
    terminal: bool = False


@dataclass
class TickInfo:
    """Everything the harness needs to build one trace record."""

    z: Detection
    features: tuple[int, int, int, int]
    belief: list[float]
    action: str
    phase: str
    ticks_in_action: int
    command: NavCommand
    estimate: tuple[float, float]
    n_eff: float
    entropy: float
    planned: Optional[str] = None
    planned_value: Optional[float] = None
    goal: Optional[list[float]] = None
    flags: tuple[str, ...] = ()


def init_agent(config: SimConfig, rng: np.random.Generator) -> AgentState:
    particles = init_uniform(config.filter.n_particles, rng, config.world.bounds)
    execution = ActionExecution(HlAction.TRACK, config.agent.track_budget)
    history = DetectionHistory(horizon=max(5.0, 2 * config.sensor.depth_window),
                               stable_streak=config.agent.k_conf,
                               gate_radius=config.agent.detection_gate)
    return AgentState(
        belief=ContextBelief.uniform_recoverable(),
        particles=particles,
        execution=execution,
        history=history,
    )


def _budget_for(action: HlAction, config: SimConfig) -> int:
    return {
        HlAction.TRACK: config.agent.track_budget,
        HlAction.ACTIVE_MOVE: config.agent.active_move_budget,
        HlAction.SEARCH: config.agent.search_budget,
    }[action]


def irrecoverable_check(elapsed_since_confirmed: float, timeout: float) -> bool:
    """True once continuous non-detection exceeds the timeout."""
    return elapsed_since_confirmed > timeout


# ---------------------------------------------------------------------------
# executors
# ---------------------------------------------------------------------------

def _stay(robot: RobotConfig, pan: Optional[float] = None) -> RobotConfig:
    return RobotConfig(robot.x, robot.y, robot.heading,
                       robot.pan if pan is None else pan)


def _gaze_anchor(agent: AgentState, world: WorldState,
                 config: SimConfig) -> np.ndarray:
    """Where the sensor head should look: a fresh raw detection wins over the
    particle mean, so the head follows measurements even before the filter
    has locked on (and re-locks quickly after target jumps)."""
    recent = agent.history.last_detection()
    if recent is not None and world.time - recent.t <= config.agent.velocity_window:
        return np.asarray(recent.position)
    return agent.particles.mean()


def executor_track(agent: AgentState, world: WorldState,
                   config: SimConfig) -> tuple[NavCommand, str]:
    """Pan the sensor toward the gaze anchor; base stays put."""
    ex = agent.execution
    robot = world.robot
    anchor = _gaze_anchor(agent, world, config)
    d = anchor - robot.position
    desired_pan = 0.0
    if np.hypot(d[0], d[1]) > 1e-9:
        bearing = math.atan2(d[1], d[0])
        desired_pan = angle_diff(bearing, robot.heading)
    limit = config.world.pan_limit
    desired_pan = max(-limit, min(limit, desired_pan))
    cmd = NavCommand(_stay(robot, pan=desired_pan),
                     config.agent.max_speed, config.agent.max_turn_rate)
    if ex.detection_streak >= config.agent.k_conf:
        return cmd, PHASE_COMPLETE
    if ex.ticks_elapsed >= ex.budget:
        return cmd, PHASE_FAILED
    return cmd, PHASE_ACTIVE


def executor_active_move(agent: AgentState, world: WorldState,
                         config: SimConfig) -> tuple[NavCommand, str]:
    """Drive to the planned view configuration; done on arrival + contact.

    The sampled pan is only a starting guess: the head keeps turning toward
    the particle mean while driving, like during tracking.  A move that has
    arrived but confirms nothing within a grace period fails early, as does
    one that makes no translational progress (blocked by an occluder).
    """
    ex = agent.execution
    robot = world.robot
    goal = ex.goal if ex.goal is not None else robot
    anchor = _gaze_anchor(agent, world, config)
    d = anchor - robot.position
    limit = config.world.pan_limit
    if np.hypot(d[0], d[1]) > 1e-9:
        pan = angle_diff(math.atan2(d[1], d[0]), goal.heading)
        pan = max(-limit, min(limit, pan))
    else:
        pan = goal.pan
    cmd = NavCommand(RobotConfig(goal.x, goal.y, goal.heading, pan),
                     config.agent.max_speed, config.agent.max_turn_rate)

    # progress watchdog: repeated ticks without translation fail the move early
    pos = (robot.x, robot.y)
    gap = np.hypot(goal.x - robot.x, goal.y - robot.y)
    if ex.last_position is not None and gap > config.agent.arrival_pos_tol:
        moved = math.hypot(pos[0] - ex.last_position[0], pos[1] - ex.last_position[1])
        ex.blocked_ticks = ex.blocked_ticks + 1 if moved < 1e-6 else 0
    ex.last_position = pos

    arrived = (gap <= config.agent.arrival_pos_tol
               and abs(angle_diff(goal.heading, robot.heading)) <= config.agent.arrival_ang_tol)
    if arrived:
        ex.arrived_ticks += 1
    if arrived and ex.detection_streak >= config.agent.k_conf:
        return cmd, PHASE_COMPLETE
    if ex.arrived_ticks >= config.agent.arrive_grace:
        return cmd, PHASE_FAILED
    if ex.blocked_ticks >= config.agent.blocked_tick_limit:
        return cmd, PHASE_FAILED
    if ex.ticks_elapsed >= ex.budget:
        return cmd, PHASE_FAILED
    return cmd, PHASE_ACTIVE


def executor_search(agent: AgentState, world: WorldState,
                    config: SimConfig) -> tuple[NavCommand, str]:
    """Sweep the base to look for people; approach the nearest one found."""
    ex = agent.execution
    robot = world.robot
    if agent.last_human is not None and agent.last_human[0] >= world.time - 2.0:
        ex.approach = agent.last_human[1]
    if ex.approach is not None:
        hp = np.asarray(ex.approach)
        d = hp - robot.position
        dist = float(np.hypot(d[0], d[1]))
        heading = math.atan2(d[1], d[0]) if dist > 1e-9 else robot.heading
        standoff = config.agent.human_standoff
        if dist > standoff:
            goal_pos = hp - d / dist * standoff
        else:
            goal_pos = robot.position
        goal = RobotConfig(float(goal_pos[0]), float(goal_pos[1]), heading, 0.0)
        cmd = NavCommand(goal, config.agent.max_speed, config.agent.max_turn_rate)
    else:
        # constant-rate sweep: chase a far-ahead heading at the sweep rate
        goal = RobotConfig(robot.x, robot.y,
                           wrap_angle(robot.heading + ex.sweep_sign * math.pi / 2), 0.0)
        cmd = NavCommand(goal, config.agent.max_speed, config.agent.sweep_rate)
    if ex.detection_streak >= config.agent.k_conf:
        return cmd, PHASE_COMPLETE
    if ex.ticks_elapsed >= ex.budget:
        return cmd, PHASE_FAILED
    return cmd, PHASE_ACTIVE


_EXECUTORS = {
    HlAction.TRACK: executor_track,
    HlAction.ACTIVE_MOVE: executor_active_move,
    HlAction.SEARCH: executor_search,
}


def _start_action(action: HlAction, agent: AgentState, world: WorldState,
                  config: SimConfig, rng: np.random.Generator) -> ActionExecution:
    ex = ActionExecution(action, _budget_for(action, config))
    if action == HlAction.ACTIVE_MOVE:
        candidates = sample_candidates(world.robot, world, config.utility, rng)
        x_hat = agent.particles.mean()
        best, _scores = select_best(candidates, x_hat, world.robot, agent.particles,
                                    config.utility, world, config.fov)
        ex.goal = best
    return ex


# ---------------------------------------------------------------------------
# context components from cues
# ---------------------------------------------------------------------------

def build_components(agent: AgentState, world: WorldState,
                     config: SimConfig) -> dict[ContextState, Optional[GaussComponent]]:
    params = config.filter.context
    comps: dict[ContextState, Optional[GaussComponent]] = {
        ContextState.IRRECOVERABLE: None,
    }
    if agent.last_detection is not None:
        t_det, pos = agent.last_detection
        # anchor on the last detection; extrapolate briefly along the velocity
        # estimate so a target that slips out of view can be coasted after
        horizon = min(world.time - t_det + config.world.dt, 1.0)
        comps[ContextState.VISIBLE] = context_component(
            ContextState.VISIBLE, params,
            last_state=(np.asarray(pos), np.asarray(agent.velocity_estimate)),
            dt=horizon,
        )
    else:
        comps[ContextState.VISIBLE] = None
    occ_cue = agent.last_occluder
    if occ_cue is not None and world.occluder_by_id(occ_cue[0]) is not None:
        comps[ContextState.OCCLUDED] = context_component(
            ContextState.OCCLUDED, params,
            occluder_point=np.asarray(occ_cue[1]),
            sensor_origin=world.robot.position,
        )
    else:
        comps[ContextState.OCCLUDED] = None
    if agent.last_human is not None:
        comps[ContextState.DISAPPEARANCE] = context_component(
            ContextState.DISAPPEARANCE, params,
            human_position=np.asarray(agent.last_human[1]),
        )
    else:
        comps[ContextState.DISAPPEARANCE] = None
    return comps


# ---------------------------------------------------------------------------
# the tick
# ---------------------------------------------------------------------------

def tick(agent: AgentState, world: WorldState, config: SimConfig,
         rng: np.random.Generator) -> tuple[AgentState, NavCommand, TickInfo]:
    """One perceive-estimate-plan-act cycle; mutates and returns the agent."""
    flags: list[str] = []
    robot = world.robot
    fov = config.fov

    # --- sense
    z = detect_target(world, robot, fov, config.sensor, rng)
    agent.history.push(world.time, z, robot)
    features, cues = extract_features(world, robot, fov, z, agent.history,
                                      config.sensor, rng)

    # --- cue bookkeeping: only gated, confirmed streaks move the cues, so
    # clutter can neither hijack the target estimate nor reset the clock
    stable_now = (agent.history.last_stable is not None
                  and agent.history.last_stable.t == world.time)
    if stable_now:
        z_pos = agent.history.last_stable.position
        prev = agent.last_detection
        agent.last_detection = (world.time, z_pos)
        if prev is not None and 0.0 < world.time - prev[0] <= config.agent.velocity_window:
            dt_pair = world.time - prev[0]
            v = (np.asarray(z_pos) - np.asarray(prev[1])) / dt_pair
            speed = float(np.hypot(v[0], v[1]))
            if speed > 3.0:
                v = v * (3.0 / speed)
            agent.velocity_estimate = (float(v[0]), float(v[1]))
        agent.last_confirmed_t = world.time
        agent.consecutive_detections = agent.history.streak
    else:
        agent.consecutive_detections = agent.history.streak
        if agent.last_detection is not None and \
                world.time - agent.last_detection[0] > config.agent.velocity_window:
            agent.velocity_estimate = (0.0, 0.0)
    ex0 = agent.execution
    ex0.detection_streak = (min(agent.history.streak, ex0.detection_streak + 1)
                            if agent.history.streak > 0 else 0)
    if cues.occluder_id is not None and cues.occluder_point is not None:
        agent.last_occluder = (cues.occluder_id, cues.occluder_point)
    if cues.humans:
        hp = min(cues.humans,
                 key=lambda h: float(np.hypot(h[1][0] - robot.x, h[1][1] - robot.y)))
        agent.last_human = (world.time, hp[1])

    # --- irrecoverable timeout
    elapsed = world.time - agent.last_confirmed_t
    if irrecoverable_check(elapsed, config.agent.detection_timeout):
        agent.terminal = True
        agent.belief = ContextBelief.point_mass(ContextState.IRRECOVERABLE)
        agent.execution.phase = PHASE_TERMINAL
        cmd = NavCommand(_stay(robot), config.agent.max_speed, config.agent.max_turn_rate)
        info = TickInfo(
            z=z, features=features.as_tuple(), belief=agent.belief.as_list(),
            action=agent.execution.action.label, phase=PHASE_TERMINAL,
            ticks_in_action=agent.execution.ticks_elapsed, command=cmd,
            estimate=tuple(map(float, agent.particles.mean())),
            n_eff=agent.particles.n_eff(), entropy=entropy(agent.particles),
            flags=("irrecoverable",),
        )
        return agent, cmd, info

    # --- filter
    components = build_components(agent, world, config)
    regen_comps = [(c, comp) for c, comp in components.items()
                   if comp is not None and agent.belief.probs[int(c)] > 0.0]
    try:
        agent.particles = predict(agent.particles, agent.belief, components, rng)
    except PredictionUnavailable:
        flags.append("prediction_skipped")
    try:
        agent.particles = update(agent.particles, z, world, robot, fov, config.sensor)
    except FilterDivergence:
        flags.append("diverged")
        agent.particles = init_uniform(config.filter.n_particles, rng, config.world.bounds)
        agent.belief = ContextBelief.uniform_recoverable()
    if regen_comps and z.empty:
        regen = RegenParams(
            enabled=True,
            mixture_weights=np.array([agent.belief.probs[int(c)] for c, _ in regen_comps]),
            mixture_means=np.stack([comp.mean for _, comp in regen_comps]),
            mixture_sigmas=np.array([comp.sigma for _, comp in regen_comps]),
            bounds=config.world.bounds,
            max_attempts=config.filter.regen_max_attempts,
        )
    else:
        regen = RegenParams(enabled=False, bounds=config.world.bounds)
    result = resample(agent.particles, world, robot, fov, regen, rng,
                      config.filter.neff_threshold)
    agent.particles = result.particles
    if result.fallback_uniform:
        flags.append("regen_fallback")

    # --- act
    ex = agent.execution
    ex.ticks_elapsed += 1  # counted before stepping so it never exceeds budget
    executor = _EXECUTORS[ex.action]
    cmd, phase = executor(agent, world, config)
    ex.phase = phase

    planned = None
    planned_value = None
    completed_tick_action = ex.action
    completed_tick_phase = phase
    if phase == PHASE_ACTIVE:
        agent.belief = _observe(agent.belief, features, config)
    else:
        pushed = belief_predict(agent.belief, ex.action, config.pomdp)
        agent.belief = _observe(pushed, features, config)
        action, value = plan(agent.belief, config.pomdp)
        planned, planned_value = action.label, value
        agent.execution = _start_action(action, agent, world, config, rng)
        cmd, _ = _EXECUTORS[action](agent, world, config)

    goal_vec = None
    if agent.execution.goal is not None:
        goal_vec = [float(v) for v in agent.execution.goal.as_vector()]
    info = TickInfo(
        z=z, features=features.as_tuple(), belief=agent.belief.as_list(),
        action=completed_tick_action.label, phase=completed_tick_phase,
        ticks_in_action=ex.ticks_elapsed, command=cmd,
        estimate=tuple(map(float, agent.particles.mean())),
        n_eff=agent.particles.n_eff(), entropy=entropy(agent.particles),
        planned=planned, planned_value=planned_value, goal=goal_vec,
        flags=tuple(flags),
    )
    return agent, cmd, info


def _observe(belief: ContextBelief, features, config: SimConfig) -> ContextBelief:
    try:
        return belief_update(belief, features, config.pomdp)
    except BeliefUpdateError:
        # conservative recovery: spread over the recoverable states
        return ContextBelief.uniform_recoverable()
