import json

import pytest
from typer.testing import CliRunner

from app import EXIT_CONFIG, EXIT_FAILED, cli, load_config
from utils.exceptions import ConfigError

runner = CliRunner()

SCENARIOS = {
    "convergence",
    "elliptic-invariance",
    "elliptic-line",
    "flat-circle",
    "flat-product-torus",
    "football-descent",
    "halfweight-demo",
    "potential-torus-ricci",
    "sphere-descent",
    "sphere-isodrastic",
    "sphere-latitude",
}


def test_list_prints_every_scenario():
    result = runner.invoke(cli, ["list", "--json"])
    assert result.exit_code == 0
    names = {entry["name"] for entry in json.loads(result.stdout)}
    assert names == SCENARIOS


def test_unknown_scenario_is_a_config_error(tmp_path):
    result = runner.invoke(cli, ["run", "no-such-scenario", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG


def test_bad_ladder_is_a_config_error(tmp_path):
    result = runner.invoke(cli, ["run", "convergence", "--ladder", "64,32", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG
    result = runner.invoke(cli, ["run", "convergence", "--ladder", "64,abc", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG


def test_unknown_convergence_target_is_a_config_error(tmp_path):
    result = runner.invoke(cli, ["run", "convergence", "--scenario", "nowhere", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG


def test_run_writes_reports(tmp_path):
    result = runner.invoke(cli, ["run", "elliptic-line", "--n", "64", "--out", str(tmp_path), "--format", "json,csv"])
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / "elliptic-line.json").read_text())
    assert summary["passed"] is True
    assert summary["checks"]
    assert (tmp_path / "log.txt").exists()


def test_failed_checks_exit_with_one(tmp_path):
    config_file = tmp_path / "strict.json"
    config_file.write_text(json.dumps({"tolerances": {"half_weight": -1.0}}))
    result = runner.invoke(cli, ["run", "elliptic-line", "--n", "64", "--config", str(config_file), "--out", str(tmp_path)])
    assert result.exit_code == EXIT_FAILED


def test_flags_override_the_config_file(tmp_path):
    config_file = tmp_path / "cfg.json"
    config_file.write_text(json.dumps({"n": 128, "seed": 3}))
    cfg = load_config("flat-circle", config_file, {"n": 64, "seed": None})
    assert cfg.n == 64
    assert cfg.seed == 3
    assert cfg.scenario == "flat-circle"


def test_config_file_must_be_an_object(tmp_path):
    config_file = tmp_path / "cfg.json"
    config_file.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config("flat-circle", config_file, {})


def test_runs_are_reproducible_across_thread_counts(tmp_path):
    outputs = []
    for threads in ("1", "1", "2"):
        out = tmp_path / f"run{len(outputs)}"
        args = ["run", "elliptic-invariance", "--n", "64", "--steps", "5", "--seed", "11", "--threads", threads]
        result = runner.invoke(cli, args + ["--out", str(out), "--format", "json"])
        assert result.exit_code == 0, result.output
        outputs.append((out / "elliptic-invariance.json").read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
