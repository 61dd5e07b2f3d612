import csv
import json
import math
import os
from dataclasses import dataclass, field
from logging import getLogger
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

import config
from utils.svg_chart import line_chart

LOGGER = getLogger(__name__)


def round_significant(value: float, digits: int = config.SIGNIFICANT_DIGITS):
    if value is None or not math.isfinite(value):
        return None
    if value == 0.0:
        return 0.0
    return float(f"{value:.{digits}g}")


def rounded(obj: Any, digits: int = config.SIGNIFICANT_DIGITS) -> Any:
    """Recursively round floats (numpy scalars and arrays included) for stable JSON."""
    if isinstance(obj, BaseModel):
        return rounded(obj.model_dump(mode="json"), digits)
    if isinstance(obj, dict):
        return {str(k): rounded(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return rounded(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_significant(float(obj), digits)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(rounded(obj), sort_keys=True, indent=2)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ScenarioResult:
    """Everything a scenario produced: checks, JSON documents, CSV tables and charts."""
    scenario: str
    checks: List[Check] = field(default_factory=list)
    documents: Dict[str, Any] = field(default_factory=dict)
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    charts: Dict[str, dict] = field(default_factory=dict)

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        self.checks.append(Check(name, bool(passed), detail))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def chart(self, name: str, title: str, series: Dict[str, Tuple[Sequence[float], Sequence[float]]], **options):
        self.charts[name] = {"title": title, "series": series, **options}


def write_csv(path: str, rows: List[Dict[str, Any]]):
    columns = sorted({key for row in rows for key in row})
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (json.dumps(rounded(v)) if isinstance(v, (list, dict)) else rounded(v)) for k, v in row.items()})


def write_result(result: ScenarioResult, out_dir: str, formats: Sequence[str]) -> List[str]:
    """Write the result files; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "json" in formats:
        summary = {
            "scenario": result.scenario,
            "passed": result.passed,
            "checks": [c.__dict__ for c in result.checks],
            "reports": result.documents,
        }
        path = os.path.join(out_dir, f"{result.scenario}.json")
        with open(path, "w") as handle:
            handle.write(dumps(summary) + "\n")
        written.append(path)
    if "csv" in formats:
        for name, rows in result.tables.items():
            path = os.path.join(out_dir, f"{result.scenario}-{name}.csv")
            write_csv(path, rows)
            written.append(path)
    if "svg" in formats:
        for name, chart in result.charts.items():
            path = os.path.join(out_dir, f"{result.scenario}-{name}.svg")
            with open(path, "w") as handle:
                handle.write(line_chart(**chart))
            written.append(path)
    LOGGER.info(f"Wrote {len(written)} files to {out_dir}")
    return written
