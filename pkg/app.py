from logging import getLogger, FileHandler, StreamHandler, INFO, basicConfig
from pathlib import Path
from traceback import format_exc
from typing import List, Optional
import json
import os

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

import config
import state
from plugins import load_plugins
from utils.exceptions import ConfigError, MaslovLabError
from utils.models.scenario_model import ScenarioConfig
from utils.report_writer import ScenarioResult, write_result
from utils.run_logger import send_error, send_info

LOGGER = getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

cli = typer.Typer(
    name="maslov",
    help="Maslov class, mean curvature and Bohr-Sommerfeld experiments on discrete Lagrangians.",
    add_completion=False,
    no_args_is_help=True,
)


def setup_logging(out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    basicConfig(
        format="[%(asctime)s] [%(levelname)s] - %(message)s",
        datefmt="%d-%b-%y %I:%M:%S %p",
        handlers=[FileHandler(os.path.join(out_dir, "log.txt")), StreamHandler()],
        level=INFO,
        force=True,
    )


def _split(value: Optional[str], cast=str) -> Optional[List]:
    if value is None:
        return None
    try:
        return [cast(item.strip()) for item in value.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigError(f"cannot parse list {value!r}: {e}")


def load_config(scenario: str, config_file: Optional[Path], overrides: dict) -> ScenarioConfig:
    """JSON file values first, then command-line flags (flags win)."""
    data = {}
    if config_file is not None:
        try:
            data = json.loads(Path(config_file).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {config_file}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"config {config_file} must hold a JSON object")
    data.update({key: value for key, value in overrides.items() if value is not None})
    data["scenario"] = scenario
    try:
        return ScenarioConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid scenario config: {e}")


@cli.command()
def run(
    scenario: str = typer.Argument(..., help="Scenario name (see `maslov list`)"),
    config_file: Optional[Path] = typer.Option(None, "--config", help="JSON scenario config"),
    out: Optional[str] = typer.Option(None, "--out", help="Output directory (default $MASLOV_OUT or maslov_out)"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker count"),
    formats: Optional[str] = typer.Option(None, "--format", help="Comma list of json,csv,svg"),
    n: Optional[int] = typer.Option(None, "--n", help="Loop vertex count"),
    n1: Optional[int] = typer.Option(None, "--n1", help="Torus grid size along s"),
    n2: Optional[int] = typer.Option(None, "--n2", help="Torus grid size along t"),
    theta: Optional[float] = typer.Option(None, "--theta", help="Latitude polar angle"),
    ladder: Optional[str] = typer.Option(None, "--ladder", help="Comma list of resolutions"),
    target: Optional[str] = typer.Option(None, "--scenario", help="Scenario refined by `convergence`"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    steps: Optional[int] = typer.Option(None, "--steps", help="Flow steps or descent iterations"),
    step_size: Optional[float] = typer.Option(None, "--step-size"),
    epsilon: Optional[float] = typer.Option(None, "--epsilon", help="Potential perturbation amplitude"),
    delta: Optional[float] = typer.Option(None, "--delta", help="Submanifold perturbation amplitude"),
    power: Optional[int] = typer.Option(None, "--power", help="Power k of the determinant"),
):
    """Run one scenario and write its reports."""
    registry = load_plugins()
    if scenario not in registry:
        send_error(f"Unknown scenario {scenario!r}; valid names: {', '.join(sorted(registry))}")
        raise typer.Exit(EXIT_CONFIG)
    try:
        cfg = load_config(
            scenario,
            config_file,
            {
                "output_dir": out,
                "threads": threads,
                "formats": _split(formats),
                "n": n,
                "n1": n1,
                "n2": n2,
                "theta": theta,
                "ladder": _split(ladder, int),
                "target": target,
                "seed": seed,
                "steps": steps,
                "step_size": step_size,
                "epsilon": epsilon,
                "delta": delta,
                "power": power,
            },
        )
    except ConfigError as e:
        send_error("Configuration error", e)
        raise typer.Exit(EXIT_CONFIG)

    out_dir = cfg.output_dir or config.OUTPUT_DIR
    setup_logging(out_dir)
    state.run_settings["threads"] = cfg.threads or config.THREADS
    LOGGER.info(f"Running {scenario} with {state.run_settings['threads']} worker(s), output in {out_dir}")

    try:
        result = registry[scenario].run(cfg)
    except ConfigError as e:
        send_error("Configuration error", e)
        raise typer.Exit(EXIT_CONFIG)
    except MaslovLabError as e:
        LOGGER.error(format_exc())
        result = ScenarioResult(scenario)
        result.check("scenario_completed", False, f"{type(e).__name__}: {e}")

    write_result(result, out_dir, cfg.formats)
    if not result.passed:
        send_error(f"{scenario}: {len(result.failures)} failed check(s): " + ", ".join(c.name for c in result.failures))
        raise typer.Exit(EXIT_FAILED)
    send_info(f"{scenario}: all {len(result.checks)} checks passed")


@cli.command("list")
def list_scenarios(as_json: bool = typer.Option(False, "--json", help="Machine-readable catalog")):
    """List the built-in scenarios."""
    registry = load_plugins()
    catalog = [{"name": name, "description": registry[name].description} for name in sorted(registry)]
    if as_json:
        typer.echo(json.dumps(catalog, indent=2))
        return
    table = Table(title="Scenarios")
    table.add_column("name", style="cyan")
    table.add_column("description")
    for entry in catalog:
        table.add_row(entry["name"], entry["description"])
    Console().print(table)


def main():
    cli()


if __name__ == "__main__":
    main()
