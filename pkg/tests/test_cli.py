import json

import yaml
from click.testing import CliRunner

from tracksim.cli import main

FAST_CFG = {"filter": {"n_particles": 200}}


def write_fast_config(tmp_path):
    path = tmp_path / "fast.yaml"
    path.write_text(yaml.safe_dump(FAST_CFG))
    return str(path)


def test_run_named_scenario(tmp_path):
    runner = CliRunner()
    trace = tmp_path / "out.ndjson"
    result = runner.invoke(main, ["run", "--scenario", "fast-move", "--seed", "3",
                                  "--config", write_fast_config(tmp_path),
                                  "--trace", str(trace)])
    assert result.exit_code == 0, result.output
    assert trace.exists()
    assert "tracking_ratio" in result.output
    first = json.loads(trace.read_text().splitlines()[0])
    assert first["type"] == "header"


def test_run_scenario_file(tmp_path):
    script = {
        "name": "tiny", "duration": 2.0,
        "world": {"target": {"pos": [2.0, 0.0]}},
        "events": [],
    }
    spath = tmp_path / "tiny.yaml"
    spath.write_text(yaml.safe_dump(script))
    runner = CliRunner()
    result = runner.invoke(main, ["run", "--scenario", str(spath),
                                  "--config", write_fast_config(tmp_path)])
    assert result.exit_code == 0, result.output


def test_run_invalid_scenario_exits_nonzero(tmp_path):
    script = {"name": "bad", "duration": 2.0, "world": {},
              "events": [{"t": 1.0, "kind": "bogus"}]}
    spath = tmp_path / "bad.yaml"
    spath.write_text(yaml.safe_dump(script))
    runner = CliRunner()
    result = runner.invoke(main, ["run", "--scenario", str(spath)])
    assert result.exit_code != 0
    assert "unknown kind" in result.output


def test_batch_report(tmp_path):
    runner = CliRunner()
    out = tmp_path / "report.json"
    result = runner.invoke(main, ["batch", "--scenario", "fast-move",
                                  "--trials", "2", "--seed", "1",
                                  "--config", write_fast_config(tmp_path),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report["n_trials"] == 2
    assert "field-scale reference" in result.output


def test_replay_matches_run(tmp_path):
    runner = CliRunner()
    trace = tmp_path / "t.ndjson"
    r1 = runner.invoke(main, ["run", "--scenario", "fast-move", "--seed", "2",
                              "--config", write_fast_config(tmp_path),
                              "--trace", str(trace)])
    assert r1.exit_code == 0, r1.output
    r2 = runner.invoke(main, ["replay", "--trace", str(trace)])
    assert r2.exit_code == 0, r2.output
    run_metrics = json.loads(r1.output[r1.output.index("{"):r1.output.rindex("}") + 1])
    replay_metrics = json.loads(r2.output[r2.output.index("{"):r2.output.rindex("}") + 1])
    assert run_metrics == replay_metrics


def test_batch_multi_scenario_suite(tmp_path):
    runner = CliRunner()
    out = tmp_path / "suite.json"
    result = runner.invoke(main, ["batch", "--scenario", "fast-move",
                                  "--scenario", "occlusion",
                                  "--trials", "1", "--seed", "4",
                                  "--config", write_fast_config(tmp_path),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert set(report["scenarios"]) == {"fast-move", "occlusion"}
    assert report["combined"]["trials"] == 2
    assert "scenario=combined" in result.output
