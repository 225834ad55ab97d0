"""Command-line interface.

All data commands (run / batch / replay) are thin clients of the HTTP API:
by default they mount the service in-process, and with --host they talk to
a running server instead.  `serve` starts the server with a live session.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click
import httpx
import yaml


class _InProcessClient:
    """Sync facade over the service mounted in-process (no sockets)."""

    def __init__(self):
        from .service.app import create_app
        self._app = create_app()

    def post(self, path: str, json: dict) -> httpx.Response:
        import asyncio

        async def go():
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(transport=transport,
                                         base_url="http://tracksim.local",
                                         timeout=600.0) as client:
                return await client.post(path, json=json)

        return asyncio.run(go())

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _client(host: Optional[str]):
    if host:
        return httpx.Client(base_url=host, timeout=600.0)
    return _InProcessClient()


def _scenario_payload(scenario: str) -> dict:
    """File paths are inlined so remote servers need not share a filesystem."""
    path = Path(scenario)
    if path.exists():
        with open(path) as fh:
            return {"scenario": path.stem, "script": yaml.safe_load(fh)}
    return {"scenario": scenario, "script": None}


def _config_payload(config: Optional[str]) -> Optional[dict]:
    if config is None:
        return None
    with open(config) as fh:
        return yaml.safe_load(fh) or {}


def _fail(response: httpx.Response) -> None:
    try:
        detail = response.json().get("detail")
    except Exception:
        detail = response.text
    if isinstance(detail, dict):
        click.echo(f"error: {detail.get('detail')}", err=True)
        for problem in detail.get("problems", []):
            click.echo(f"  - {problem}", err=True)
    else:
        click.echo(f"error: {detail}", err=True)
    sys.exit(2)


@click.group()
def main() -> None:
    """Active object tracking simulator."""


@main.command()
@click.option("--scenario", required=True, help="scenario file or built-in name")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--config", default=None, type=click.Path(exists=True), help="config YAML")
@click.option("--trace", "trace_path", default=None, type=click.Path(), help="write the trace here")
@click.option("--host", default=None, help="remote server URL (default: in-process)")
def run(scenario: str, seed: int, config: Optional[str], trace_path: Optional[str],
        host: Optional[str]) -> None:
    """Run a single trial and print its metrics."""
    body = {
        **_scenario_payload(scenario),
        "seed": seed,
        "config": _config_payload(config),
        "include_trace": trace_path is not None,
    }
    with _client(host) as client:
        resp = client.post("/trials", json=body)
        if resp.status_code != 200:
            _fail(resp)
        data = resp.json()
    if trace_path:
        Path(trace_path).write_text(data["trace"])
        click.echo(f"trace written to {trace_path} (sha256 {data['trace_sha256'][:16]}...)")
    metrics = data["metrics"]
    click.echo(json.dumps({k: v for k, v in metrics.items() if k != "episodes"}, indent=2))
    episodes = metrics["episodes"]
    if episodes:
        click.echo(f"loss episodes: {len(episodes)}, "
                   f"restored: {sum(1 for e in episodes if e['restored'])}")


@main.command()
@click.option("--scenario", "scenarios", required=True, multiple=True,
              help="scenario file or name; repeat for a multi-scenario suite")
@click.option("--trials", default=20, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--config", default=None, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path(), help="write the JSON report here")
@click.option("--host", default=None)
def batch(scenarios: tuple[str, ...], trials: int, seed: int, config: Optional[str],
          out: Optional[str], host: Optional[str]) -> None:
    """Run a seeded batch of trials and print the aggregate report."""
    if len(scenarios) > 1:
        body = {"scenarios": list(scenarios), "trials": trials, "seed": seed,
                "config": _config_payload(config)}
        with _client(host) as client:
            resp = client.post("/suites", json=body)
            if resp.status_code != 200:
                _fail(resp)
            report = resp.json()["report"]
        if out:
            Path(out).write_text(json.dumps(report, indent=2))
            click.echo(f"report written to {out}")
        for name, sub in report["scenarios"].items():
            _print_aggregate(name, sub["n_trials"], sub["seed"], sub["aggregate"])
        _print_aggregate("combined", report["n_trials"], report["seed"],
                         report["combined"])
        return
    body = {
        **_scenario_payload(scenarios[0]),
        "trials": trials,
        "seed": seed,
        "config": _config_payload(config),
    }
    with _client(host) as client:
        resp = client.post("/batches", json=body)
        if resp.status_code != 200:
            _fail(resp)
        report = resp.json()["report"]
    if out:
        Path(out).write_text(json.dumps(report, indent=2))
        click.echo(f"report written to {out}")
    _print_aggregate(report["scenario"], report["n_trials"], report["seed"],
                     report["aggregate"])


def _print_aggregate(name: str, trials: int, seed: int, agg: dict) -> None:
    click.echo(f"scenario={name} trials={trials} seed={seed}")
    sr = agg["success_ratio"]
    sr_text = f"{sr:.2f}" if sr is not None else "n/a"
    click.echo(f"  SR  (episodes): {sr_text}   [{agg['episodes']} episodes]")
    tr = agg["tracking_ratio"]
    click.echo(f"  TR  mean={tr['mean']:.3f} std={tr['std']:.3f}" if tr else "  TR  n/a")
    rt = agg["restore_time"]
    if rt:
        click.echo(f"  ART mean={rt['mean']:.2f}s std={rt['std']:.2f}s "
                   f"median={agg['restore_time_median']:.2f}s")
    ft = agg["failure_time"]
    if ft:
        click.echo(f"  FT  mean={ft['mean']:.1f}s std={ft['std']:.1f}s "
                   f"({agg['failures_triggered']} trials)")
    for action, ratio in sorted(agg["action_success"].items()):
        counts = agg["action_outcomes"][action]
        click.echo(f"  action {action}: {ratio:.2f} "
                   f"({counts['complete']}/{counts['complete'] + counts['failed']})")
    ref = agg["reference"]
    click.echo("  field-scale reference: "
               f"SR {ref['success_ratio']['mean']} TR {ref['tracking_ratio']['mean']} "
               f"ART {ref['average_restoring_time_s']['mean']}s "
               f"FT {ref['failure_time_s']['mean']}s")


@main.command()
@click.option("--trace", "trace_path", required=True, type=click.Path(exists=True))
@click.option("--host", default=None)
def replay(trace_path: str, host: Optional[str]) -> None:
    """Recompute metrics from a stored trace file."""
    text = Path(trace_path).read_text()
    with _client(host) as client:
        resp = client.post("/metrics/recompute", json={"trace": text})
        if resp.status_code != 200:
            _fail(resp)
        metrics = resp.json()
    click.echo(json.dumps({k: v for k, v in metrics.items() if k != "episodes"}, indent=2))


@main.command()
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--bind", default="127.0.0.1", show_default=True)
@click.option("--scenario", default="sandbox", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--speed", default=1.0, show_default=True, type=float)
@click.option("--config", default=None, type=click.Path(exists=True))
@click.option("--paused", is_flag=True, help="start the session paused")
@click.option("--ui-dir", default=None, type=click.Path(), help="serve the frontend from here")
def serve(port: int, bind: str, scenario: str, seed: int, speed: float,
          config: Optional[str], paused: bool, ui_dir: Optional[str]) -> None:
    """Start the live session server (websocket + REST)."""
    import uvicorn

    from .config import SimConfig, apply_overrides
    from .scenario import ScenarioError
    from .service.app import build_session, create_app

    cfg = apply_overrides(SimConfig(), _config_payload(config))
    try:
        session = build_session(scenario, seed, speed, cfg, start_paused=paused)
    except ScenarioError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    if ui_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        candidate = bundled if bundled.is_dir() else None
        ui_dir = str(candidate) if candidate else None
    app = create_app(session=session, ui_dir=ui_dir)
    click.echo(f"session: scenario={scenario} seed={seed} speed={speed}x")
    if ui_dir:
        click.echo(f"ui: http://{bind}:{port}/ (static from {ui_dir})")
    click.echo(f"websocket: ws://{bind}:{port}/ws")
    uvicorn.run(app, host=bind, port=port, log_level="warning")


if __name__ == "__main__":
    main()
