"""Live session: the running simulation exposed to adversary clients.

One session owns one Simulation.  Clients connect over a websocket, receive
``hello`` then a stream of ``snapshot`` messages, and send ``command``
messages.  Commands are queued and applied atomically at the next tick
boundary in arrival order; malformed commands produce an ``error`` message
and the session continues.  Slow clients are dropped once their outbound
buffer fills, so broadcasting never stalls the simulation.

Message schemas are documented in protocol.md at the repository root.
"""
from __future__ import annotations

import asyncio
import math
from dataclasses import dataclass
from typing import Optional

from . import PROTOCOL_VERSION
from .config import SimConfig
from .harness import Simulation, particles_payload
from .scenario import ScenarioScript, WorldEvent, normalize_event
from .geometry import WorldState

COMMAND_KINDS = (
    "drag_target",
    "place_occluder",
    "remove_occluder",
    "move_human",
    "spawn_human",
    "take_target",
    "drop_target",
    "pause",
    "resume",
    "set_speed",
    # extensions: deterministic stepping for scripted clients, and restart
    "step",
    "reset",
)


class CommandError(ValueError):
    pass


def _require_point(payload: dict, key: str, bounds) -> list[float]:
    value = payload.get(key)
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in value)):
        raise CommandError(f"{key} must be a finite [x, y] pair")
    x0, y0, x1, y1 = bounds
    if not (x0 <= value[0] <= x1 and y0 <= value[1] <= y1):
        raise CommandError(f"{key} {list(value)} is outside the world bounds")
    return [float(value[0]), float(value[1])]


def lower_command(kind: str, payload: dict, world: WorldState,
                  t: float, bounds) -> list[WorldEvent]:
    """Validate an adversary command and translate it to world events.

    Control commands (pause/resume/set_speed/step/reset) are handled by the
    session itself and never reach this function.
    """
    if kind == "drag_target":
        to = _require_point(payload, "to", bounds)
        return [normalize_event(t, "move_target", {"to": to})]
    if kind == "place_occluder":
        a = _require_point(payload, "a", bounds)
        b = _require_point(payload, "b", bounds)
        oid = payload.get("id")
        if oid is None:
            raise CommandError("place_occluder needs an id")
        return [normalize_event(t, "place_occluder", {"id": str(oid), "a": a, "b": b})]
    if kind == "remove_occluder":
        oid = payload.get("id")
        if oid is None or world.occluder_by_id(str(oid)) is None:
            raise CommandError(f"unknown occluder id {oid!r}")
        return [normalize_event(t, "remove_occluder", {"id": str(oid)})]
    if kind == "spawn_human":
        at = _require_point(payload, "at", bounds)
        hid = payload.get("id")
        if hid is None:
            raise CommandError("spawn_human needs an id")
        return [normalize_event(t, "human_appear", {"id": str(hid), "at": at})]
    if kind == "move_human":
        hid = payload.get("id")
        if hid is None or world.human_by_id(str(hid)) is None:
            raise CommandError(f"unknown human id {hid!r}")
        to = _require_point(payload, "to", bounds)
        return [normalize_event(t, "human_move", {"id": str(hid), "to": to})]
    if kind == "take_target":
        hid = payload.get("id")
        if hid is None or world.human_by_id(str(hid)) is None:
            raise CommandError(f"unknown human id {hid!r}")
        if world.target.carrier is not None:
            raise CommandError("target is already being carried")
        return [normalize_event(t, "human_takes_target", {"id": str(hid)})]
    if kind == "drop_target":
        if world.target.carrier is None:
            raise CommandError("target is not being carried")
        events_payload = {}
        if payload.get("position") is not None:
            events_payload["position"] = _require_point(payload, "position", bounds)
        return [normalize_event(t, "drop_target", events_payload)]
    raise CommandError(f"unknown command kind {kind!r}")


@dataclass
class SessionConfig:
    scenario: ScenarioScript
    config: SimConfig
    seed: int = 0
    speed: float = 1.0          # wall-clock multiplier
    start_paused: bool = False
    record_trace: bool = True


class Session:
    """Owns a Simulation plus the inbound command queue and client fan-out."""

    CLIENT_BUFFER = 64

    def __init__(self, settings: SessionConfig):
        self.settings = settings
        self.sim = Simulation(settings.scenario, settings.config, settings.seed)
        self.paused = settings.start_paused
        self.speed = settings.speed
        self.commands: asyncio.Queue = asyncio.Queue()
        self.clients: dict[int, asyncio.Queue] = {}
        self._next_client = 0
        self._step_budget = 0
        self._stopped = False
        self.trace: list[dict] = [self.sim.header()] if settings.record_trace else []

    # -- client management ---------------------------------------------------

    def attach(self) -> tuple[int, asyncio.Queue]:
        cid = self._next_client
        self._next_client += 1
        q: asyncio.Queue = asyncio.Queue(maxsize=self.CLIENT_BUFFER)
        self.clients[cid] = q
        return cid, q

    def detach(self, cid: int) -> None:
        self.clients.pop(cid, None)

    def hello_message(self) -> dict:
        return {
            "type": "hello",
            "v": PROTOCOL_VERSION,
            "scenario": self.sim.script.name,
            "seed": self.sim.seed,
            "tick": self.sim.tick_index,
            "speed": self.speed,
            "paused": self.paused,
        }

    def _broadcast(self, message: dict) -> None:
        dead = []
        for cid, q in self.clients.items():
            try:
                q.put_nowait(message)
            except asyncio.QueueFull:
                dead.append(cid)  # slow client: drop rather than stall
        for cid in dead:
            self.detach(cid)
            # a None sentinel could not be queued either; the socket handler
            # notices the detach on its next poll

    # -- command intake -------------------------------------------------------

    async def submit(self, client_id: int, message: dict) -> None:
        await self.commands.put((client_id, message))

    def _apply_control(self, kind: str, payload: dict) -> bool:
        """Handle session-level commands; True if the command was one."""
        if kind == "pause":
            self.paused = True
            return True
        if kind == "resume":
            self.paused = False
            return True
        if kind == "set_speed":
            speed = payload.get("multiplier", payload.get("speed"))
            if not isinstance(speed, (int, float)) or not (0.01 <= speed <= 100.0):
                raise CommandError("set_speed needs a multiplier in [0.01, 100]")
            self.speed = float(speed)
            return True
        if kind == "step":
            n = payload.get("n", 1)
            if not isinstance(n, int) or not (1 <= n <= 10_000):
                raise CommandError("step needs an integer n in [1, 10000]")
            self._step_budget += n
            return True
        if kind == "reset":
            self.sim = Simulation(self.settings.scenario, self.settings.config,
                                  self.settings.seed)
            self.trace = [self.sim.header()] if self.settings.record_trace else []
            return True
        return False

    def _drain_commands(self) -> list[WorldEvent]:
        """Validate queued commands in arrival order; errors go back to senders."""
        events: list[WorldEvent] = []
        while True:
            try:
                client_id, message = self.commands.get_nowait()
            except asyncio.QueueEmpty:
                return events
            kind = message.get("kind")
            payload = {k: v for k, v in message.items()
                       if k not in ("type", "v", "kind", "seq")}
            try:
                if kind not in COMMAND_KINDS:
                    raise CommandError(f"unknown command kind {kind!r}")
                if self._apply_control(kind, payload):
                    continue
                events.extend(lower_command(kind, payload, self.sim.world,
                                            self.sim.world.time,
                                            self.sim.config.world.bounds))
            except CommandError as e:
                self._send_error(client_id, str(e), message.get("seq"))

    def _send_error(self, client_id: int, reason: str, seq=None) -> None:
        q = self.clients.get(client_id)
        if q is None:
            return
        msg = {"type": "error", "v": PROTOCOL_VERSION, "reason": reason}
        if seq is not None:
            msg["seq"] = seq
        try:
            q.put_nowait(msg)
        except asyncio.QueueFull:
            self.detach(client_id)

    # -- stepping -------------------------------------------------------------

    def snapshot_message(self, record: dict) -> dict:
        return {
            "type": "snapshot",
            "v": PROTOCOL_VERSION,
            "tick": record["tick"],
            "t": record["t"],
            "record": record,
            "particles": particles_payload(self.sim.agent,
                                           self.sim.config.harness.snapshot_particles),
            "metrics": self.sim.metrics.snapshot_dict(),
            "paused": self.paused,
            "speed": self.speed,
            "terminal": self.sim.done,
        }

    def tick_once(self) -> Optional[dict]:
        """Apply queued commands and advance one tick; None when finished."""
        events = self._drain_commands()
        if self.sim.done:
            return None
        record = self.sim.advance(injected=events)
        if self.settings.record_trace:
            self.trace.append(record)
        if record["tick"] % self.sim.config.harness.snapshot_every == 0 or self.sim.done:
            self._broadcast(self.snapshot_message(record))
        return record

    async def run(self) -> None:
        """Real-time loop: honors pause, step budgets and the speed multiplier."""
        dt = self.sim.config.world.dt
        while not self._stopped:
            if self.sim.done and self._step_budget == 0:
                await asyncio.sleep(0.05)
                # control commands (reset) still act; world edits are dropped
                self._drain_commands()
                continue
            if self.paused and self._step_budget == 0:
                await asyncio.sleep(0.005)
                # commands queued while paused stay queued until stepping resumes,
                # except control commands which must act immediately
                self._peek_controls()
                continue
            record = self.tick_once()
            if self._step_budget > 0:
                self._step_budget -= 1
                if self._step_budget == 0 and record is not None \
                        and record["tick"] % self.sim.config.harness.snapshot_every != 0:
                    # make the final stepped tick visible so scripted clients
                    # can synchronize on it regardless of the cadence
                    self._broadcast(self.snapshot_message(record))
            else:
                await asyncio.sleep(dt / self.speed)

    def _peek_controls(self) -> None:
        """Apply control commands while paused without consuming world edits."""
        pending = []
        while True:
            try:
                item = self.commands.get_nowait()
            except asyncio.QueueEmpty:
                break
            client_id, message = item
            kind = message.get("kind")
            if kind in ("pause", "resume", "set_speed", "step", "reset"):
                payload = {k: v for k, v in message.items()
                           if k not in ("type", "v", "kind", "seq")}
                try:
                    self._apply_control(kind, payload)
                except CommandError as e:
                    self._send_error(client_id, str(e), message.get("seq"))
            else:
                pending.append(item)
        for item in pending:
            self.commands.put_nowait(item)

    def stop(self) -> None:
        self._stopped = True
