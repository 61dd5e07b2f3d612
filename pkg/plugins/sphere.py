import numpy as np

import config
from plugins import scenario
from utils.exceptions import HalfIntegerBoundaryError
from utils.geometry.ambient import FootballSphere, RoundSphere
from utils.geometry.curvature import verify_transport_curvature
from utils.geometry.dec import periods
from utils.geometry.flow import dilation_field, invariance_experiment, volume_descent
from utils.geometry.hamiltonians import SpherePolynomial, sphere_polynomial_basis
from utils.geometry.lagmesh import build_loop, edge_lengths, induced_volume
from utils.geometry.surfaces import perturbed_equator, sphere_latitude
from utils.geometry.transport import decompose_connection, is_bohr_sommerfeld, relative_connection
from utils.models.scenario_model import ScenarioConfig
from utils.report_writer import ScenarioResult
from utils.scenario_support import announce, expect_error, model_for, trace_rows, trace_series

TAU = 2.0 * np.pi
SWEEP_COSINES = (0.0, 0.5, -0.5)
DESCENT_STOPS = ("converged", "stationary", "stagnation", "iteration_cap", "volume_collapse")


def _latitude(result, cfg, model, theta, n):
    """Checks on one latitude; returns its table row."""
    label = f"theta={theta:.6g}"
    cos = float(np.cos(theta))
    mesh = build_loop(model, sphere_latitude(model, theta), n)
    conn = relative_connection(mesh)
    volume, _ = induced_volume(mesh)
    eta_period = float(periods(conn.eta)[0])
    curvature = verify_transport_curvature(mesh, conn)
    alpha_period = float(periods(curvature.alpha)[0])
    enclosed = TAU * (1.0 - cos) * model.radius**2
    tol = cfg.tolerance("period", 1e-3)

    announce(result, f"{label}_length", abs(volume - TAU * np.sin(theta) * model.radius) < tol, f"{volume:.9f}")
    announce(result, f"{label}_eta_period", abs(eta_period - TAU * cos) < tol, f"{eta_period:.9f}")
    announce(result, f"{label}_alpha_period", abs(alpha_period - TAU * cos) < tol, f"{alpha_period:.9f}")
    announce(result, f"{label}_gauss_bonnet", abs(alpha_period + enclosed / model.radius**2 - TAU) < tol)
    step = edge_lengths(mesh).max()
    bound = cfg.tolerance("transport_constant", 1.0) * step**2
    announce(result, f"{label}_transport_vs_mean_curvature", curvature.transport_residual < bound, f"{curvature.transport_residual:.3e} < {bound:.3e}")

    bs = is_bohr_sommerfeld(conn)
    defect = float(bs.defects[0])
    turns = cos % 1.0
    near_half = abs(turns - 0.5) < config.HALF_INTEGER_MARGIN
    if near_half:
        expect_error(result, f"{label}_half_integer_guard", HalfIntegerBoundaryError, lambda: decompose_connection(conn))
        integers = None
    else:
        integers = decompose_connection(conn).maslov_integers
        announce(result, f"{label}_maslov", integers == [int(np.round(cos))], f"{integers}")
    return {
        "theta": theta,
        "cos_theta": cos,
        "vertices": n,
        "length": volume,
        "eta_period": eta_period,
        "alpha_period": alpha_period,
        "maslov_integers": integers,
        "bohr_sommerfeld": bs.is_bohr_sommerfeld,
        "bohr_sommerfeld_defect": defect,
        "l_norm": curvature.l_norm,
        "h_norm": curvature.h_norm,
        "l_minimal": curvature.minimality.l_minimal,
        "h_minimal": curvature.minimality.h_minimal,
        "transport_residual": curvature.transport_residual,
    }


@scenario("sphere-latitude", "Latitudes of the round sphere: Bohr-Sommerfeld defects, mean curvature periods, L- and H-minimality")
def sphere_latitude_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    result = ScenarioResult(cfg.scenario)
    model = model_for(cfg, RoundSphere)
    n = cfg.n or 8192
    rows = []
    if cfg.theta is not None:
        rows.append(_latitude(result, cfg, model, cfg.theta, n))
    for cos in SWEEP_COSINES:
        rows.append(_latitude(result, cfg, model, float(np.arccos(cos)), n))
    sweep = {round(row["cos_theta"], 9): row for row in rows[-len(SWEEP_COSINES):]}

    equator, upper, lower = sweep[0.0], sweep[0.5], sweep[-0.5]
    announce(result, "equator_bohr_sommerfeld", equator["bohr_sommerfeld"], f"defect {equator['bohr_sommerfeld_defect']:.2e}")
    for name, row in (("cos=0.5", upper), ("cos=-0.5", lower)):
        announce(result, f"{name}_not_bohr_sommerfeld", not row["bohr_sommerfeld"])
        announce(result, f"{name}_defect_pi", abs(row["bohr_sommerfeld_defect"] - np.pi) < cfg.tolerance("defect", 1e-3), f"{row['bohr_sommerfeld_defect']:.6f}")
        announce(result, f"{name}_not_l_minimal", not row["l_minimal"], f"L-norm {row['l_norm']:.3e}")
    announce(result, "equator_l_minimal", equator["l_minimal"], f"L-norm {equator['l_norm']:.3e}")
    announce(result, "latitudes_h_minimal", all(row["h_minimal"] for row in rows))
    result.tables["latitudes"] = rows
    result.documents["latitudes"] = rows
    return result


@scenario("sphere-isodrastic", "Equator under Hamiltonian flows keeps its periods; a dilation of a latitude crosses the half-integer boundary")
def sphere_isodrastic(cfg: ScenarioConfig) -> ScenarioResult:
    result = ScenarioResult(cfg.scenario)
    model = model_for(cfg, RoundSphere)
    n = cfg.n or 512
    steps = 40 if cfg.steps is None else cfg.steps
    step = cfg.step_size or 0.01

    equator = build_loop(model, sphere_latitude(model, 0.5 * np.pi), n)
    family = [SpherePolynomial(model, {(1, 0, 0): 1.0}), SpherePolynomial(model, {(1, 0, 1): 1.0}), SpherePolynomial(model, {(0, 1, 2): 1.0})]
    hamiltonian = invariance_experiment(equator, family, step, steps, threads=cfg.threads)
    announce(result, "hamiltonian_maslov_constant", hamiltonian.constant, f"{hamiltonian.initial_integers}")
    drift = max(hamiltonian.fractional_drift)
    announce(result, "hamiltonian_fractional_drift", drift < cfg.tolerance("fractional_drift", 1e-3), f"{drift:.2e}")
    defects = [s.bohr_sommerfeld_defect for t in hamiltonian.traces for s in t.steps]
    announce(result, "hamiltonian_bohr_sommerfeld_defect", max(defects) < cfg.tolerance("defect", 1e-3), f"{max(defects):.2e}")

    start = cfg.theta or 1.2
    latitude = build_loop(model, sphere_latitude(model, start), n)
    dilation = invariance_experiment(latitude, [dilation_field(-1.0)], step, steps, continue_through_boundary=True, threads=cfg.threads)
    expected = {"before": [int(np.round(np.cos(start)))], "after": [int(np.round(np.cos(start))) + 1]}
    crossed = any(j["before"] == expected["before"] and j["after"] == expected["after"] for j in dilation.jumps)
    announce(result, "dilation_changes_maslov", crossed and not dilation.constant, f"{dilation.jumps}")
    boundary = [s.step for s in dilation.traces[0].steps if s.note == "half_integer_boundary"]
    announce(result, "dilation_passes_half_integer", bool(boundary), f"steps {boundary[:1]}..{boundary[-1:]}")

    result.documents["hamiltonian"] = hamiltonian.to_document()
    result.documents["dilation"] = dilation.to_document()
    result.tables["traces"] = [row for t in hamiltonian.traces + dilation.traces for row in trace_rows(t)]
    fractions = {
        t.label: ([s.step for s in t.steps], [s.fractional_periods[0] for s in t.steps]) for t in dilation.traces
    }
    result.chart("dilation", "Fractional period under dilation", fractions, x_label="step", y_label="fractional period")
    return result


def _descent(result, cfg, model, label):
    mesh = build_loop(model, perturbed_equator(model, cfg.delta if cfg.delta is not None else 0.05, 3), cfg.n or 512)
    basis = sphere_polynomial_basis(model, cfg.basis_degree or 3)
    final, trace = volume_descent(mesh, basis, max_iterations=200 if cfg.steps is None else cfg.steps, label=label)
    volumes = trace.volumes
    announce(result, f"{label}_volume_monotone", bool(np.all(np.diff(volumes) <= 1e-9 * volumes[0])), f"{volumes[0]:.6f} -> {volumes[-1]:.6f}")
    integers = trace.recorded_integers
    announce(result, f"{label}_maslov_constant", all(m == integers[0] for m in integers), f"{integers[0] if integers else None}")
    announce(result, f"{label}_terminated", trace.stop_reason in DESCENT_STOPS, trace.stop_reason)
    result.documents[label] = trace.to_document()
    result.tables[label] = trace_rows(trace)
    return final, trace


@scenario("sphere-descent", "Isodrastic volume descent from a perturbed equator of the round sphere; latitudes are stationary")
def sphere_descent(cfg: ScenarioConfig) -> ScenarioResult:
    result = ScenarioResult(cfg.scenario)
    model = model_for(cfg, RoundSphere)
    final, trace = _descent(result, cfg, model, "perturbed-equator")
    last = trace.steps[-1]
    announce(result, "converged", trace.stop_reason == "converged", f"{trace.stop_reason} after {last.step} iterations")
    announce(result, "final_l_norm", last.l_norm is not None and last.l_norm < config.L_MINIMAL_TOL, f"{last.l_norm}")
    announce(result, "final_length", abs(last.volume - TAU * model.radius) < cfg.tolerance("length", 1e-3), f"{last.volume:.9f}")

    latitude = build_loop(model, sphere_latitude(model, 1.2), cfg.n or 512)
    _, still = volume_descent(latitude, sphere_polynomial_basis(model, cfg.basis_degree or 3), max_iterations=5, label="latitude")
    announce(result, "latitude_stationary", still.stop_reason == "stationary", still.stop_reason)
    result.documents["latitude"] = still.to_document()
    result.chart("descent", "Isodrastic descent on the round sphere", trace_series([trace]), x_label="iteration", y_label="length")
    return result


@scenario("football-descent", "Isodrastic volume descent on a football-deformed sphere")
def football_descent(cfg: ScenarioConfig) -> ScenarioResult:
    result = ScenarioResult(cfg.scenario)
    model = model_for(cfg, lambda: FootballSphere(1.0, 0.3))
    _, trace = _descent(result, cfg, model, "football")
    result.chart("descent", "Isodrastic descent on the football sphere", trace_series([trace]), x_label="iteration", y_label="length")
    result.chart("l-norm", "Mean curvature norm", trace_series([trace], "l_norm"), x_label="iteration", y_label="|alpha_H|", log_y=True)
    return result
