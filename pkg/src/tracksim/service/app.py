"""FastAPI application: REST endpoints for trials/batches plus the live
websocket session.

The CLI is a thin client of this API (in-process by default, remote with
--host); the adversary UI speaks the websocket protocol in protocol.md.
"""
from __future__ import annotations

import asyncio
import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import RedirectResponse
from fastapi.staticfiles import StaticFiles

from .. import PROTOCOL_VERSION, __version__
from ..bridge import Session, SessionConfig
from ..config import ConfigError, SimConfig, apply_overrides, config_to_dict
from ..harness import (
    parse_trace_text,
    replay_metrics,
    run_batch,
    run_suite,
    run_trial,
    trace_sha256,
    trace_to_text,
)
from ..scenario import ScenarioError, builtin_scenario_names, load_script, script_from_dict
from .models import (
    BatchRequest,
    BatchResponse,
    MetricsModel,
    ReplayRequest,
    ScenarioInfo,
    SuiteRequest,
    TrialRequest,
    TrialResponse,
    VersionInfo,
)


def _resolve_script(name: str, inline: Optional[dict]):
    try:
        if inline is not None:
            return script_from_dict(inline, name=name)
        return load_script(name)
    except ScenarioError as e:
        raise HTTPException(status_code=422,
                            detail={"detail": "invalid scenario", "problems": e.problems})


def _resolve_config(overrides: Optional[dict]) -> SimConfig:
    try:
        return apply_overrides(SimConfig(), overrides)
    except ConfigError as e:
        raise HTTPException(status_code=422, detail={"detail": str(e), "problems": []})


def create_app(session: Optional[Session] = None,
               ui_dir: Optional[str] = None) -> FastAPI:
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = None
        if session is not None:
            task = asyncio.create_task(session.run())
        yield
        if session is not None:
            session.stop()
        if task is not None:
            task.cancel()

    app = FastAPI(title="tracksim", version=__version__, lifespan=lifespan)
    app.state.session = session

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/version", response_model=VersionInfo)
    def version() -> VersionInfo:
        return VersionInfo(version=__version__, protocol=PROTOCOL_VERSION)

    @app.get("/scenarios", response_model=list[ScenarioInfo])
    def scenarios() -> list[ScenarioInfo]:
        out = []
        for name in builtin_scenario_names():
            s = load_script(name)
            out.append(ScenarioInfo(name=s.name, duration=s.duration,
                                    seed=s.seed, events=len(s.events)))
        return out

    @app.get("/config/default")
    def default_config() -> dict:
        return config_to_dict(SimConfig())

    @app.post("/trials", response_model=TrialResponse)
    def post_trial(req: TrialRequest) -> TrialResponse:
        script = _resolve_script(req.scenario, req.script)
        config = _resolve_config(req.config)
        metrics, records = run_trial(script, config, req.seed)
        text = trace_to_text(records)
        return TrialResponse(
            scenario=script.name,
            seed=req.seed,
            metrics=MetricsModel(**metrics.to_dict()),
            trace_sha256=trace_sha256(records),
            trace=text if req.include_trace else None,
        )

    @app.post("/batches", response_model=BatchResponse)
    def post_batch(req: BatchRequest) -> BatchResponse:
        script = _resolve_script(req.scenario, req.script)
        config = _resolve_config(req.config)
        report = run_batch(script, config, req.trials, req.seed)
        return BatchResponse(report=report)

    @app.post("/suites", response_model=BatchResponse)
    def post_suite(req: SuiteRequest) -> BatchResponse:
        scripts = [_resolve_script(name, None) for name in req.scenarios]
        config = _resolve_config(req.config)
        report = run_suite(scripts, config, req.trials, req.seed)
        return BatchResponse(report=report)

    @app.post("/metrics/recompute", response_model=MetricsModel)
    def recompute(req: ReplayRequest) -> MetricsModel:
        try:
            records = parse_trace_text(req.trace)
        except json.JSONDecodeError as e:
            raise HTTPException(status_code=422, detail={"detail": f"bad trace: {e}"})
        metrics = replay_metrics(records)
        return MetricsModel(**metrics.to_dict())

    @app.websocket("/ws")
    async def websocket_session(ws: WebSocket):
        await ws.accept()
        session: Optional[Session] = app.state.session
        if session is None:
            await ws.send_text(json.dumps(
                {"type": "error", "v": PROTOCOL_VERSION,
                 "reason": "no live session; start the server with `tracksim serve`"}))
            await ws.close()
            return
        cid, queue = session.attach()
        await ws.send_text(json.dumps(session.hello_message()))

        async def pump_outbound():
            while True:
                msg = await queue.get()
                await ws.send_text(json.dumps(msg))

        sender = asyncio.create_task(pump_outbound())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError:
                    await session.submit(cid, {"kind": None, "seq": None})
                    continue
                mtype = message.get("type")
                if mtype == "hello":
                    v = message.get("v")
                    if v != PROTOCOL_VERSION:
                        await ws.send_text(json.dumps(
                            {"type": "error", "v": PROTOCOL_VERSION,
                             "reason": f"protocol version mismatch: server {PROTOCOL_VERSION}, client {v}"}))
                    continue
                if mtype == "command":
                    await session.submit(cid, message)
                    continue
                await ws.send_text(json.dumps(
                    {"type": "error", "v": PROTOCOL_VERSION,
                     "reason": f"unknown message type {mtype!r}"}))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            session.detach(cid)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

        @app.get("/")
        def index():
            return RedirectResponse("/ui/")

    return app


def build_session(scenario: str, seed: int, speed: float,
                  config: Optional[SimConfig] = None,
                  start_paused: bool = False) -> Session:
    script = load_script(scenario)
    return Session(SessionConfig(
        scenario=script,
        config=config or SimConfig(),
        seed=seed,
        speed=speed,
        start_paused=start_paused,
    ))
