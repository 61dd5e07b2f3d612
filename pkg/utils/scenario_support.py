from logging import getLogger
from typing import Callable, List, Optional

from utils import run_logger
from utils.geometry.ambient import AmbientModel, load_model
from utils.geometry.flow import FlowTrace
from utils.models.scenario_model import ScenarioConfig
from utils.report_writer import ScenarioResult

LOGGER = getLogger(__name__)


def announce(result: ScenarioResult, name: str, passed: bool, detail: str = "") -> bool:
    """Record a check on the result and print it."""
    run_logger.send_check(name, bool(passed), detail)
    return result.check(name, passed, detail)


def expect_error(result: ScenarioResult, name: str, error: type, action: Callable) -> Optional[Exception]:
    """Check that `action()` raises `error`; returns the raised exception."""
    try:
        action()
    except error as raised:
        announce(result, name, True, f"{type(raised).__name__}: {raised}")
        return raised
    except Exception as raised:
        announce(result, name, False, f"expected {error.__name__}, got {type(raised).__name__}: {raised}")
        return raised
    announce(result, name, False, f"expected {error.__name__}, nothing raised")
    return None


def model_for(cfg: ScenarioConfig, default: Callable[[], AmbientModel]) -> AmbientModel:
    if cfg.model is None:
        return default()
    run_logger.send_warning(f"{cfg.scenario}: ambient model overridden by config ({cfg.model.kind})")
    return load_model(cfg.model)


def trace_rows(trace: FlowTrace) -> List[dict]:
    rows = []
    for record in trace.steps:
        row = {"trace": trace.label, **record.__dict__}
        rows.append(row)
    return rows


def trace_series(traces: List[FlowTrace], attribute: str = "volume") -> dict:
    return {
        trace.label: ([s.step for s in trace.steps], [getattr(s, attribute) for s in trace.steps]) for trace in traces
    }
