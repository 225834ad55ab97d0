"""Trial runner: plays a scenario script against the agent loop.

One Simulation owns the world, the agent and the random stream; the live
session server drives the same object, so a headless run and a zero-client
live session with the same seed produce identical traces.

Trace records serialize as canonical JSON lines; identical seeds give
byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .agent import AgentState, TickInfo, init_agent, tick
from .config import SimConfig, apply_overrides
from .geometry import WorldState, step_world
from .metrics import MetricsAccumulator, MetricsConfig, TrialMetrics, aggregate_metrics
from .scenario import ScenarioScript, WorldEvent, apply_event, due_scheduled_events


def canonical_json(obj) -> str:
    """Deterministic JSON encoding used for traces and wire messages."""
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _decimate(xs: np.ndarray, ws: np.ndarray, k: int) -> list[list[float]]:
    n = len(ws)
    if k <= 0:
        return []
    if n <= k:
        idx = np.arange(n)
    else:
        idx = np.linspace(0, n - 1, k).astype(int)
    return [[float(xs[i, 0]), float(xs[i, 1]), float(ws[i])] for i in idx]


def build_record(tick_index: int, world: WorldState, info: TickInfo,
                 events: list[WorldEvent]) -> dict:
    """One self-describing trace record; plain JSON types only."""
    tgt = world.target
    rec = {
        "v": 1,
        "tick": tick_index,
        "t": float(world.time),
        "robot": [world.robot.x, world.robot.y, world.robot.heading, world.robot.pan],
        "target": {
            "p": [float(tgt.position[0]), float(tgt.position[1])],
            "vel": [float(tgt.velocity[0]), float(tgt.velocity[1])],
            "present": bool(tgt.present),
            "carrier": tgt.carrier,
        },
        "occluders": [
            {"id": o.id, "a": [o.a[0], o.a[1]], "b": [o.b[0], o.b[1]]}
            for o in world.occluders
        ],
        "humans": [{"id": h.id, "p": [h.position[0], h.position[1]]}
                   for h in world.humans],
        "z": list(info.z.value) if info.z.value is not None else None,
        "features": list(info.features),
        "belief": info.belief,
        "action": info.action,
        "phase": info.phase,
        "ticks_in_action": info.ticks_in_action,
        "estimate": [info.estimate[0], info.estimate[1]],
        "n_eff": float(info.n_eff),
        "entropy": float(info.entropy),
        "events": [e.to_dict() for e in events],
        "flags": list(info.flags),
    }
    if info.planned is not None:
        rec["planned"] = info.planned
        rec["planned_value"] = float(info.planned_value)
    if info.goal is not None:
        rec["goal"] = info.goal
    return rec


def particles_payload(agent: AgentState, k: int) -> list[list[float]]:
    return _decimate(agent.particles.xs, agent.particles.ws, k)


class Simulation:
    """Deterministic tick-by-tick execution of one scenario."""

    def __init__(self, script: ScenarioScript, config: SimConfig, seed: int):
        self.script = script
        self.config = apply_overrides(config, script.config_overrides)
        self.seed = seed
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, script.seed]))
        self.world = script.initial_world
        self.agent = init_agent(self.config, self.rng)
        self.tick_index = 0
        self._event_cursor = 0
        self.metrics = MetricsAccumulator(MetricsConfig(
            k_conf=self.config.agent.k_conf,
            loss_gap=self.config.harness.loss_gap,
            detection_gate=self.config.agent.detection_gate,
        ))
        self.done = False

    @property
    def n_ticks(self) -> int:
        return int(round(self.script.duration / self.config.world.dt))

    def header(self) -> dict:
        """Leading trace record describing the run; lets replay rebuild metrics."""
        return {
            "v": 1,
            "type": "header",
            "scenario": self.script.name,
            "seed": self.seed,
            "dt": self.config.world.dt,
            "k_conf": self.config.agent.k_conf,
            "loss_gap": self.config.harness.loss_gap,
            "detection_gate": self.config.agent.detection_gate,
            "detection_timeout": self.config.agent.detection_timeout,
        }

    def pending_script_events(self) -> list[WorldEvent]:
        due = []
        t = self.world.time
        while (self._event_cursor < len(self.script.events)
               and self.script.events[self._event_cursor].t <= t + 1e-9):
            due.append(self.script.events[self._event_cursor])
            self._event_cursor += 1
        return due

    def advance(self, injected: Optional[list[WorldEvent]] = None) -> dict:
        """Run one tick: apply events, step the agent, step the world."""
        if self.done:
            raise RuntimeError("simulation already finished")
        applied: list[WorldEvent] = []
        for ev in (injected or []):
            self.world = apply_event(self.world, ev)
            applied.append(ev)
        for ev in self.pending_script_events():
            self.world = apply_event(self.world, ev)
            applied.append(ev)
        for ev in due_scheduled_events(self.world, self.world.time):
            self.world = apply_event(self.world, ev)
            applied.append(ev)

        self.agent, cmd, info = tick(self.agent, self.world, self.config, self.rng)
        record = build_record(self.tick_index, self.world, info, applied)
        record["particles"] = particles_payload(self.agent, self.config.harness.trace_particles)
        self.metrics.push(record)

        self.world = step_world(
            self.world, cmd, self.config.world.dt,
            bounds=self.config.world.bounds,
            occluder_inflation=self.config.world.occluder_inflation,
            pan_limit=self.config.world.pan_limit,
            human_speed=self.config.world.human_speed,
        )
        self.tick_index += 1
        # exact tick time (tick * dt) instead of accumulated +dt, so event
        # schedules and trace timestamps cannot drift over long runs
        self.world = replace(self.world, time=self.tick_index * self.config.world.dt)
        if self.agent.terminal or self.tick_index >= self.n_ticks:
            self.done = True
        return record


def run_trial(script: ScenarioScript, config: SimConfig, seed: int,
              trace_path: Optional[str | Path] = None,
              keep_records: bool = True) -> tuple[TrialMetrics, list[dict]]:
    """Play a whole script; returns metrics and (optionally) the trace.

    The trace starts with a header record followed by one record per tick.
    """
    sim = Simulation(script, config, seed)
    records: list[dict] = [sim.header()]
    sink = open(trace_path, "w") if trace_path else None
    try:
        if sink is not None:
            sink.write(canonical_json(records[0]) + "\n")
        while not sim.done:
            record = sim.advance()
            if sink is not None:
                sink.write(canonical_json(record))
                sink.write("\n")
            if keep_records:
                records.append(record)
    finally:
        if sink is not None:
            sink.close()
    if not keep_records:
        records = records[:1]
    return sim.metrics.finalize(), records


def trace_to_text(records: list[dict]) -> str:
    return "".join(canonical_json(r) + "\n" for r in records)


def parse_trace_text(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def load_trace(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return parse_trace_text(fh.read())


def trace_sha256(records: list[dict]) -> str:
    return hashlib.sha256(trace_to_text(records).encode()).hexdigest()


def split_trace(records: list[dict]) -> tuple[Optional[dict], list[dict]]:
    """Separate the header (if present) from the per-tick records."""
    if records and records[0].get("type") == "header":
        return records[0], records[1:]
    return None, records


def _run_trials(script: ScenarioScript, config: SimConfig, n_trials: int,
                seed: int) -> list[TrialMetrics]:
    if n_trials < 1:
        raise ValueError("need at least one trial")
    return [run_trial(script, config, seed + i, keep_records=False)[0]
            for i in range(n_trials)]


def run_batch(script: ScenarioScript, config: SimConfig, n_trials: int,
              seed: int) -> dict:
    """Seeded batch of trials with a deterministic aggregate report."""
    per_trial = _run_trials(script, config, n_trials, seed)
    return {
        "scenario": script.name,
        "n_trials": n_trials,
        "seed": seed,
        "per_trial": [m.to_dict() for m in per_trial],
        "aggregate": aggregate_metrics(per_trial),
    }


def run_suite(scripts: list[ScenarioScript], config: SimConfig, n_trials: int,
              seed: int) -> dict:
    """Batches over several scenarios with a per-scenario breakdown."""
    scenarios = {}
    pooled: list[TrialMetrics] = []
    for script in scripts:
        per_trial = _run_trials(script, config, n_trials, seed)
        pooled.extend(per_trial)
        scenarios[script.name] = {
            "scenario": script.name,
            "n_trials": n_trials,
            "seed": seed,
            "per_trial": [m.to_dict() for m in per_trial],
            "aggregate": aggregate_metrics(per_trial),
        }
    return {
        "n_trials": n_trials,
        "seed": seed,
        "scenarios": scenarios,
        "combined": aggregate_metrics(pooled),
    }


def replay_metrics(records: list[dict]) -> TrialMetrics:
    """Recompute metrics from a stored trace, using its header constants."""
    header, ticks = split_trace(records)
    cfg = MetricsConfig()
    if header is not None:
        cfg = MetricsConfig(k_conf=int(header.get("k_conf", cfg.k_conf)),
                            loss_gap=float(header.get("loss_gap", cfg.loss_gap)),
                            detection_gate=float(header.get("detection_gate",
                                                            cfg.detection_gate)))
    acc = MetricsAccumulator(cfg)
    for r in ticks:
        acc.push(r)
    return acc.finalize()
