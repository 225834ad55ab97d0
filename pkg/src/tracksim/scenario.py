"""Scenario scripts: an initial world layout plus a timed event list.

Events are the single mutation path for the world outside of kinematics;
the live adversary bridge lowers its commands onto the same event
structures, so a scripted run and an interactively driven run with the same
inputs evolve identically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .geometry import Human, Occluder, RobotConfig, TargetState, WorldState

EVENT_KINDS = (
    "move_target",
    "set_target_velocity",
    "place_occluder",
    "remove_occluder",
    "human_appear",
    "human_move",
    "human_takes_target",
    "drop_target",
)


class ScenarioError(ValueError):
    """Raised with a list of every offending event in a malformed script."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid scenario: " + "; ".join(problems))


@dataclass(frozen=True)
class WorldEvent:
    t: float
    kind: str
    payload: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Canonical form for traces; the record carries the tick time."""
        return {"kind": self.kind, **self.payload}


_POINT_KEYS = ("to", "at", "a", "b", "drop", "position", "v")


def normalize_event(t: float, kind: str, payload: dict) -> WorldEvent:
    """Coerce payload values to canonical types (floats for coordinates).

    Scripted events and lowered adversary commands both pass through here,
    so equivalent inputs serialize identically in traces.
    """
    out: dict[str, Any] = {}
    for key, value in payload.items():
        if value is None:
            continue
        if key in _POINT_KEYS:
            out[key] = [float(value[0]), float(value[1])]
        elif key == "carry":
            out[key] = float(value)
        elif key == "id":
            out[key] = str(value)
        else:
            out[key] = value
    return WorldEvent(float(t), str(kind), out)


@dataclass(frozen=True)
class ScenarioScript:
    name: str
    duration: float
    initial_world: WorldState
    events: tuple[WorldEvent, ...] = ()
    seed: int = 0
    config_overrides: dict = field(default_factory=dict)


def _in_bounds(p, bounds) -> bool:
    x0, y0, x1, y1 = bounds
    return x0 <= p[0] <= x1 and y0 <= p[1] <= y1


def validate_script(script: ScenarioScript, bounds=(-10.0, -10.0, 10.0, 10.0)) -> None:
    problems: list[str] = []
    if script.duration <= 0:
        problems.append(f"duration must be positive, got {script.duration}")
    if not _in_bounds(script.initial_world.robot.position, bounds):
        problems.append("robot starts out of bounds")
    if not _in_bounds(script.initial_world.target.position, bounds):
        problems.append("target starts out of bounds")
    known_occluders = {o.id for o in script.initial_world.occluders}
    known_humans = {h.id for h in script.initial_world.humans}
    last_t = -math.inf
    for i, ev in enumerate(script.events):
        where = f"event {i} ({ev.kind} @ t={ev.t})"
        if ev.kind not in EVENT_KINDS:
            problems.append(f"{where}: unknown kind")
            continue
        if not (0.0 <= ev.t <= script.duration) or not math.isfinite(ev.t):
            problems.append(f"{where}: time outside [0, duration]")
        if ev.t < last_t:
            problems.append(f"{where}: events must be time sorted")
        last_t = max(last_t, ev.t)
        p = ev.payload
        for key in ("to", "at", "drop", "a", "b", "position"):
            if key in p and p[key] is not None and not _in_bounds(p[key], bounds):
                problems.append(f"{where}: {key} out of bounds")
        if ev.kind == "place_occluder":
            if "id" not in p or "a" not in p or "b" not in p:
                problems.append(f"{where}: needs id, a, b")
            else:
                known_occluders.add(p["id"])
        elif ev.kind == "remove_occluder":
            if p.get("id") not in known_occluders:
                problems.append(f"{where}: unknown occluder id {p.get('id')!r}")
        elif ev.kind == "human_appear":
            if "id" not in p or "at" not in p:
                problems.append(f"{where}: needs id, at")
            else:
                known_humans.add(p["id"])
        elif ev.kind in ("human_move", "human_takes_target"):
            if p.get("id") not in known_humans:
                problems.append(f"{where}: unknown human id {p.get('id')!r}")
        elif ev.kind == "move_target" and "to" not in p:
            problems.append(f"{where}: needs to")
        elif ev.kind == "set_target_velocity" and "v" not in p:
            problems.append(f"{where}: needs v")
    if problems:
        raise ScenarioError(problems)


# ---------------------------------------------------------------------------
# event application
# ---------------------------------------------------------------------------

def apply_event(world: WorldState, ev: WorldEvent) -> WorldState:
    """Apply one event; unknown ids are ignored (validated scripts never hit this)."""
    p = ev.payload
    if ev.kind == "move_target":
        if world.target.carrier is not None:
            return world
        return replace(world, target=replace(world.target,
                                             position=(float(p["to"][0]), float(p["to"][1]))))
    if ev.kind == "set_target_velocity":
        return replace(world, target=replace(world.target,
                                             velocity=(float(p["v"][0]), float(p["v"][1]))))
    if ev.kind == "place_occluder":
        occ = Occluder(str(p["id"]), (float(p["a"][0]), float(p["a"][1])),
                       (float(p["b"][0]), float(p["b"][1])))
        rest = tuple(o for o in world.occluders if o.id != occ.id)
        return replace(world, occluders=rest + (occ,))
    if ev.kind == "remove_occluder":
        return replace(world, occluders=tuple(o for o in world.occluders
                                              if o.id != p.get("id")))
    if ev.kind == "human_appear":
        h = Human(str(p["id"]), (float(p["at"][0]), float(p["at"][1])))
        rest = tuple(x for x in world.humans if x.id != h.id)
        return replace(world, humans=rest + (h,))
    if ev.kind == "human_move":
        out = []
        for h in world.humans:
            if h.id == p.get("id"):
                out.append(Human(h.id, h.position, (float(p["to"][0]), float(p["to"][1]))))
            else:
                out.append(h)
        return replace(world, humans=tuple(out))
    if ev.kind == "human_takes_target":
        h = world.human_by_id(p.get("id"))
        if h is None:
            return world
        drop = p.get("drop")
        carry = p.get("carry")
        tgt = replace(
            world.target,
            present=False,
            carrier=h.id,
            position=h.position,
            velocity=(0.0, 0.0),
            drop_position=(float(drop[0]), float(drop[1])) if drop is not None else None,
            drop_time=(ev.t + float(carry)) if carry is not None else None,
        )
        return replace(world, target=tgt)
    if ev.kind == "drop_target":
        tgt = world.target
        if tgt.carrier is None:
            return world
        pos = p.get("position")
        if pos is None:
            pos = tgt.drop_position if tgt.drop_position is not None else tgt.position
        tgt = replace(tgt, present=True, carrier=None,
                      position=(float(pos[0]), float(pos[1])),
                      drop_position=None, drop_time=None)
        return replace(world, target=tgt)
    raise ValueError(f"unknown event kind {ev.kind!r}")


def due_scheduled_events(world: WorldState, t: float) -> list[WorldEvent]:
    """Internal events that fire on their own, e.g. a scheduled drop."""
    tgt = world.target
    if tgt.carrier is not None and tgt.drop_time is not None and t >= tgt.drop_time:
        return [WorldEvent(t, "drop_target", {})]
    return []


# ---------------------------------------------------------------------------
# YAML loading
# ---------------------------------------------------------------------------

def _parse_world(data: dict) -> WorldState:
    r = data.get("robot", {})
    robot = RobotConfig(float(r.get("x", 0.0)), float(r.get("y", 0.0)),
                        float(r.get("heading", 0.0)), float(r.get("pan", 0.0)))
    t = data.get("target", {})
    target = TargetState(
        position=tuple(map(float, t.get("pos", (0.0, 0.0)))),
        velocity=tuple(map(float, t.get("velocity", (0.0, 0.0)))),
        present=bool(t.get("present", True)),
    )
    occluders = tuple(
        Occluder(str(o["id"]), tuple(map(float, o["a"])), tuple(map(float, o["b"])))
        for o in data.get("occluders", [])
    )
    humans = tuple(
        Human(str(h["id"]), tuple(map(float, h["pos"])))
        for h in data.get("humans", [])
    )
    return WorldState(robot=robot, target=target, occluders=occluders, humans=humans)


def script_from_dict(data: dict, name: Optional[str] = None) -> ScenarioScript:
    if not isinstance(data, dict):
        raise ScenarioError(["script must be a mapping"])
    events = []
    for raw in data.get("events", []):
        raw = dict(raw)
        t = float(raw.pop("t", -1.0))
        kind = str(raw.pop("kind", ""))
        events.append(normalize_event(t, kind, raw))
    events.sort(key=lambda e: e.t)
    script = ScenarioScript(
        name=str(data.get("name", name or "unnamed")),
        duration=float(data.get("duration", 0.0)),
        initial_world=_parse_world(data.get("world", {})),
        events=tuple(events),
        seed=int(data.get("seed", 0)),
        config_overrides=data.get("config", {}) or {},
    )
    bounds = script.config_overrides.get("world", {}).get("bounds", (-10, -10, 10, 10))
    validate_script(script, tuple(bounds))
    return script


def builtin_scenario_names() -> list[str]:
    from importlib import resources
    pkg = resources.files("tracksim") / "scenarios"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".yaml"))


def load_script(spec: str | Path) -> ScenarioScript:
    """Load a scenario from a file path or a built-in scenario name."""
    path = Path(spec)
    if path.suffix in (".yaml", ".yml") or path.exists():
        with open(path) as fh:
            return script_from_dict(yaml.safe_load(fh), name=path.stem)
    from importlib import resources
    candidate = resources.files("tracksim") / "scenarios" / f"{spec}.yaml"
    try:
        text = candidate.read_text()
    except FileNotFoundError:
        raise ScenarioError([f"no such scenario file or built-in name: {spec!r}"]) from None
    return script_from_dict(yaml.safe_load(text), name=str(spec))
