import numpy as np

from plugins import scenario
from utils.geometry.ambient import FlatTorus
from utils.geometry.curvature import corollary_checks, hodge_match, verify_transport_curvature
from utils.geometry.flow import invariance_experiment
from utils.geometry.hamiltonians import random_fourier
from utils.geometry.lagmesh import build_loop, induced_volume
from utils.geometry.surfaces import circle, straight_line, wiggly_line
from utils.geometry.transport import (
    decompose_connection,
    half_weight,
    imtheta_zero_set,
    is_bohr_sommerfeld,
    relative_connection,
)
from utils.models.scenario_model import ScenarioConfig
from utils.report_writer import ScenarioResult
from utils.scenario_support import announce, model_for, trace_rows, trace_series


def _half_weights(result, cfg, mesh, report, label):
    volume, _ = induced_volume(mesh)
    rows, series = [], {}
    for r in cfg.r_values:
        weight = half_weight(report, mesh, r)
        announce(result, f"{label}_half_weight_total_r{r:g}", abs(weight.total - r) < cfg.tolerance("half_weight", 1e-8) * max(1.0, r), f"{weight.total:.12f}")
        rows.append({"r": r, "total": weight.total, "constant": weight.constant, "sign_warning": weight.sign_warning})
        density = weight.density.values / (volume / mesh.n_edges)
        series[f"r={r:g}"] = (np.arange(mesh.n_edges), density)
    result.tables[f"{label}_half_weights"] = rows
    return rows, series


@scenario("elliptic-line", "Closed geodesic on the square elliptic curve: special Lagrangian, trivial Maslov class, constant half weight")
def elliptic_line(cfg: ScenarioConfig) -> ScenarioResult:
    result = ScenarioResult(cfg.scenario)
    model = model_for(cfg, lambda: FlatTorus(1))
    mesh = build_loop(model, straight_line(offset=cfg.delta if cfg.delta is not None else 0.3), cfg.n or 128)

    conn = relative_connection(mesh)
    report = decompose_connection(conn, cfg.power)
    announce(result, "maslov_zero", report.maslov_integers == [0], f"{report.maslov_integers}")
    announce(result, "special", report.is_special, f"phase variation {report.phase_variation:.2e}")
    bs = is_bohr_sommerfeld(conn)
    announce(result, "bohr_sommerfeld", bs.is_bohr_sommerfeld, f"defect {bs.defects.max():.2e}")
    count = imtheta_zero_set(mesh, cfg.power)
    announce(result, "zero_set_empty", count.counts == [0], f"{count.counts} after {count.retries} phase rotations")

    curvature = verify_transport_curvature(mesh, conn)
    announce(result, "l_minimal", curvature.minimality.l_minimal, f"L-norm {curvature.l_norm:.2e}")
    announce(result, "hodge_match", hodge_match(mesh, curvature, report).consistent)
    for name, passed in corollary_checks(curvature.minimality, report).items():
        announce(result, name, passed)

    rows, series = _half_weights(result, cfg, mesh, report, "line")
    spread = max(float(np.ptp(s[1])) for s in series.values())
    announce(result, "half_weight_constant", spread < 1e-8 * max(cfg.r_values), f"spread {spread:.2e}")
    announce(result, "half_weight_positive", not any(row["sign_warning"] for row in rows))
    result.documents["maslov"] = report.to_document()
    result.documents["curvature"] = curvature.to_document()
    return result


@scenario("halfweight-demo", "Wiggly loop on the elliptic curve: trivial Maslov class with non-constant phase, half weights (phi + c) dmu")
def halfweight_demo(cfg: ScenarioConfig) -> ScenarioResult:
    result = ScenarioResult(cfg.scenario)
    model = model_for(cfg, lambda: FlatTorus(1))
    amplitude = cfg.delta if cfg.delta is not None else 0.3
    mesh = build_loop(model, wiggly_line(amplitude), cfg.n or 256)

    conn = relative_connection(mesh)
    report = decompose_connection(conn, cfg.power)
    announce(result, "maslov_zero", report.maslov_integers == [0], f"{report.maslov_integers}")
    announce(result, "trivial_periods", report.trivial_periods, f"{report.fractional_periods.tolist()}")
    announce(result, "phase_varies", report.phase_variation > 1e-3, f"phase variation {report.phase_variation:.4f}")
    announce(result, "not_special", not report.is_special)
    curvature = verify_transport_curvature(mesh, conn)
    for name, passed in corollary_checks(curvature.minimality, report).items():
        announce(result, name, passed)

    rows, series = _half_weights(result, cfg, mesh, report, "wiggly")
    largest = max(rows, key=lambda row: row["r"])
    announce(result, "large_weight_positive", not largest["sign_warning"], f"r={largest['r']:g}")
    result.documents["maslov"] = report.to_document()
    result.chart("half-weights", "Half-weight density per edge", series, x_label="edge", y_label="density / mean cell")
    return result


@scenario("elliptic-invariance", "Circle on the elliptic curve under random lattice-periodic Hamiltonian flows: Maslov integers stay fixed")
def elliptic_invariance(cfg: ScenarioConfig) -> ScenarioResult:
    result = ScenarioResult(cfg.scenario)
    model = model_for(cfg, lambda: FlatTorus(1))
    mesh = build_loop(model, circle(1.0, center=(np.pi, np.pi)), cfg.n or 128)
    rng = np.random.default_rng(cfg.seed)
    family = [random_fourier(rng, model.dim_real, amplitude=0.05) for _ in range(cfg.families or 5)]

    report = invariance_experiment(mesh, family, cfg.step_size or 0.02, 50 if cfg.steps is None else cfg.steps, cfg.power, threads=cfg.threads)
    announce(result, "initial_maslov", report.initial_integers == [cfg.power], f"{report.initial_integers}")
    announce(result, "maslov_constant", report.constant, f"jumps {report.jumps}")
    announce(result, "no_aborted_traces", not report.aborted, f"{report.aborted}")
    drift = max(report.fractional_drift)
    announce(result, "fractional_drift", drift < cfg.tolerance("fractional_drift", 1e-3), f"{drift:.2e}")
    defects = [s.bohr_sommerfeld for t in report.traces for s in t.steps]
    announce(result, "bohr_sommerfeld_along_flows", all(defects))
    final = [imtheta_zero_set(t.final_mesh, cfg.power).counts for t in report.traces]
    announce(result, "zero_set_after_flow", all(c == report.initial_integers for c in final), f"{final}")

    result.documents["invariance"] = report.to_document()
    result.tables["traces"] = [row for t in report.traces for row in trace_rows(t)]
    result.chart("volumes", "Length along Hamiltonian flows", trace_series(report.traces), x_label="step", y_label="length")
    return result
