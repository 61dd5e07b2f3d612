import numpy as np

import config
from plugins import scenario
from utils.exceptions import NotLagrangianError
from utils.geometry.ambient import FlatComplex
from utils.geometry.curvature import corollary_checks, hodge_match, verify_transport_curvature
from utils.geometry.dec import harmonic_dimension, hodge_decompose, periods
from utils.geometry.flow import volume_descent
from utils.geometry.hamiltonians import quadratic_basis
from utils.geometry.lagmesh import (
    DiscreteForm,
    build_loop,
    build_torus_grid,
    complex_frame,
    edge_lengths,
    induced_volume,
    lagrangian_residual,
    orthonormal_tangent_frames,
)
from utils.geometry.surfaces import circle, graph_torus, product_torus, tilted_torus
from utils.geometry.transport import (
    connection_curvature,
    decompose_connection,
    imtheta_zero_set,
    relative_connection,
)
from utils.models.scenario_model import ScenarioConfig
from utils.report_writer import ScenarioResult
from utils.scenario_support import announce, expect_error, model_for, trace_rows, trace_series

TAU = 2.0 * np.pi


def _maslov_checks(result, conn, mesh, expected, label):
    """Maslov integers for k = 1, 2 and the Im theta zero-set count that must agree with them."""
    reports = {}
    for power in (1, 2):
        report = decompose_connection(conn, power)
        reports[power] = report
        wanted = [power * m for m in expected]
        announce(result, f"{label}_maslov_k{power}", report.maslov_integers == wanted, f"{report.maslov_integers}")
        count = imtheta_zero_set(mesh, power)
        announce(result, f"{label}_zero_set_k{power}", count.counts == report.maslov_integers, f"Im theta count {count.counts}")
        result.documents[f"{label}_maslov_k{power}"] = report.to_document()
    return reports


def _curvature_checks(result, mesh, conn, maslov, label):
    report = verify_transport_curvature(mesh, conn)
    step = edge_lengths(mesh).max()
    bound = config.TRANSPORT_RESIDUAL_CONSTANT * step**2
    announce(result, f"{label}_transport_vs_mean_curvature", report.transport_residual < bound, f"{report.transport_residual:.3e} < {bound:.3e}")
    match = hodge_match(mesh, report, maslov)
    announce(result, f"{label}_hodge_match", match.consistent, f"period residual {match.period_residual.max():.3e}")
    for name, passed in corollary_checks(report.minimality, maslov).items():
        announce(result, f"{label}_{name}", passed)
    result.documents[f"{label}_curvature"] = report.to_document()
    return report


@scenario("flat-circle", "Unit circle in C: Maslov index, Im theta zero set, mean curvature vs transport, volume descent")
def flat_circle(cfg: ScenarioConfig) -> ScenarioResult:
    result = ScenarioResult(cfg.scenario)
    n = cfg.n or 256
    model = model_for(cfg, lambda: FlatComplex(1))
    mesh = build_loop(model, circle(), n)

    volume, _ = induced_volume(mesh)
    announce(result, "length", abs(volume - TAU) < cfg.tolerance("length", 20.0 / n**2), f"{volume:.12f}")
    conn = relative_connection(mesh)
    total = float(conn.eta.values.sum())
    announce(result, "eta_total", abs(total - TAU) < cfg.tolerance("eta_total", 1e-9), f"{total:.12f}")

    reports = _maslov_checks(result, conn, mesh, [1], "circle")
    report = _curvature_checks(result, mesh, conn, reports[1], "circle")
    announce(result, "circle_not_l_minimal", not report.minimality.l_minimal, f"L-norm {report.l_norm:.3e}")
    announce(result, "circle_h_minimal", report.minimality.h_minimal, f"H-norm {report.h_norm:.3e}")
    result.tables["edges"] = [
        {"edge": e, "eta": conn.eta.values[e], "alpha": report.alpha.values[e], "residual": report.edge_residuals[e]}
        for e in range(mesh.n_edges)
    ]

    small = build_loop(model, circle(), min(n, 64))
    basis = quadratic_basis(model.dim_real)
    steps = cfg.steps or 200
    _, collapse = volume_descent(small, basis, max_iterations=steps, isodrastic=False, label="with-flux")
    _, stationary = volume_descent(small, basis, max_iterations=steps, isodrastic=True, label="isodrastic")
    announce(result, "descent_with_flux_collapses", collapse.stop_reason == "volume_collapse", collapse.stop_reason)
    announce(result, "isodrastic_descent_stationary", stationary.stop_reason == "stationary", stationary.stop_reason)
    volumes = collapse.volumes
    announce(result, "descent_volume_monotone", bool(np.all(np.diff(volumes) <= 1e-9 * volumes[0])))
    result.documents["descent"] = [collapse.to_document(), stationary.to_document()]
    result.tables["descent"] = trace_rows(collapse) + trace_rows(stationary)
    result.chart("descent", "Volume descent on the unit circle", trace_series([collapse, stationary]), x_label="iteration", y_label="length")
    return result


@scenario("flat-product-torus", "Product torus S1 x S1 in C^2: Maslov (1,1), Hodge split of a random form, non-Lagrangian rejection")
def flat_product_torus(cfg: ScenarioConfig) -> ScenarioResult:
    result = ScenarioResult(cfg.scenario)
    n1, n2 = cfg.n1 or cfg.n or 32, cfg.n2 or cfg.n or 32
    model = model_for(cfg, lambda: FlatComplex(2))
    mesh = build_torus_grid(model, product_torus(), n1, n2)

    residual = float(lagrangian_residual(mesh).max())
    announce(result, "lagrangian", residual < config.LAGRANGIAN_TOL_FLAT, f"{residual:.2e}")
    volume, _ = induced_volume(mesh)
    relative = abs(volume / TAU**2 - 1.0)
    announce(result, "area", relative < cfg.tolerance("area", 10.0 / min(n1, n2) ** 2), f"{volume:.10f}")

    frames = orthonormal_tangent_frames(mesh).frames
    w = complex_frame(frames)
    unitarity = float(np.abs(np.conj(np.swapaxes(w, 1, 2)) @ w - np.eye(2)).max())
    announce(result, "frames_unitary", unitarity < 1e-10, f"{unitarity:.2e}")

    conn = relative_connection(mesh)
    curvature = connection_curvature(conn).max_abs()
    announce(result, "connection_flat", curvature < config.FLAT_TOL, f"{curvature:.2e}")
    reports = _maslov_checks(result, conn, mesh, [1, 1], "torus")
    report = _curvature_checks(result, mesh, conn, reports[1], "torus")
    announce(result, "torus_ricci_identity", report.ricci_residual < 1e-9, f"{report.ricci_residual:.2e}")

    rng = np.random.default_rng(cfg.seed)
    form = DiscreteForm(mesh, 1, rng.normal(size=mesh.n_edges))
    split = hodge_decompose(mesh, form)
    mismatch = float(np.abs(split.reconstruct().values - form.values).max())
    announce(result, "hodge_reconstruction", mismatch < 1e-10, f"{mismatch:.2e}")
    announce(result, "hodge_orthogonality", split.orthogonality < 1e-9, f"{split.orthogonality:.2e}")
    announce(result, "hodge_closure", split.residual < 1e-8, f"{split.residual:.2e}")
    dims = {method: harmonic_dimension(mesh, method) for method in ("graph", "svd")}
    announce(result, "harmonic_dimension", dims == {"graph": 2, "svd": 2}, f"{dims}")

    graph = build_torus_grid(model, graph_torus(cfg.delta if cfg.delta is not None else 0.1), n1, n2)
    graph_report = decompose_connection(relative_connection(graph))
    announce(result, "graph_torus_maslov", graph_report.maslov_integers == [1, 1], f"{graph_report.maslov_integers}")
    expect_error(result, "tilted_torus_rejected", NotLagrangianError, lambda: build_torus_grid(model, tilted_torus(), n1, n2))

    alpha_periods = periods(report.alpha)
    result.tables["cycles"] = [
        {"cycle": k, "eta_period": reports[1].periods[k], "alpha_period": alpha_periods[k]}
        for k in range(len(mesh.cycles))
    ]
    return result
