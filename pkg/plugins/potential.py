import numpy as np

import config
from plugins import scenario
from utils.exceptions import NotApplicableError
from utils.geometry.ambient import RoundSphere, einstein_ratio, exterior_derivative_residual
from utils.geometry.curvature import hodge_match, verify_transport_curvature, verify_ricci_identity
from utils.geometry.lagmesh import build_torus_grid, edge_lengths, face_areas, lagrangian_residual
from utils.geometry.surfaces import legendre_torus, potential_torus_model
from utils.geometry.transport import (
    connection_curvature,
    decompose_connection,
    is_bohr_sommerfeld,
    relative_connection,
)
from utils.models.scenario_model import ScenarioConfig
from utils.report_writer import ScenarioResult
from utils.scenario_support import announce, expect_error, model_for


def _ambient_checks(result, model, rng):
    """Closedness of omega and rho, and the Einstein ratio against the round sphere."""
    points = rng.uniform(0.0, 2.0 * np.pi, size=(64, model.dim_real))
    closed = exterior_derivative_residual(model, points, "symplectic")
    announce(result, "omega_closed", closed < 1e-6, f"{closed:.2e}")
    ricci_closed = exterior_derivative_residual(model, points, "ricci")
    announce(result, "ricci_closed", ricci_closed < 1e-3, f"{ricci_closed:.2e}")
    sphere = RoundSphere(1.0)
    ratios = einstein_ratio(sphere, rng.uniform(-2.0, 2.0, size=(64, 2)))
    announce(result, "round_sphere_einstein", float(np.abs(ratios - 1.0).max()) < 1e-4, f"ratio {ratios.mean():.6f}")
    spread = float(np.ptp(einstein_ratio(model, points)))
    return spread


@scenario("potential-torus-ricci", "Graph torus in a curved flat-torus potential model: d alpha_H = -rho|_S and the curved determinant connection")
def potential_torus_ricci(cfg: ScenarioConfig) -> ScenarioResult:
    result = ScenarioResult(cfg.scenario)
    epsilon = 0.05 if cfg.epsilon is None else cfg.epsilon
    model = model_for(cfg, lambda: potential_torus_model(epsilon))
    delta = 0.3 if cfg.delta is None else cfg.delta
    n1, n2 = cfg.n1 or cfg.n or 64, cfg.n2 or cfg.n or 64
    mesh = build_torus_grid(model, legendre_torus(model, delta), n1, n2)
    rng = np.random.default_rng(cfg.seed)

    spread = _ambient_checks(result, model, rng)
    if model.curved:
        announce(result, "not_einstein", spread > 1e-6, f"ratio spread {spread:.3e}")
    residual = float(lagrangian_residual(mesh).max())
    announce(result, "lagrangian", residual < config.LAGRANGIAN_TOL_CURVED, f"{residual:.2e}")

    tol = cfg.tolerance("ricci", 5e-3)
    ricci = verify_ricci_identity(mesh)
    announce(result, "ricci_identity", ricci.residual < tol, f"{ricci.residual:.3e}")
    areas = face_areas(mesh)
    rho_density = np.abs(ricci.ricci.values / areas).max()
    if model.curved:
        announce(result, "ricci_restriction_nonzero", rho_density > 1e-4, f"max |rho|_S| {rho_density:.3e}")

    conn = relative_connection(mesh)
    curvature = connection_curvature(conn)
    mismatch = float(np.abs((curvature.values - ricci.ricci.values) / areas).max())
    announce(result, "connection_curvature_is_ricci", mismatch < tol, f"{mismatch:.3e}")
    report = decompose_connection(conn, cfg.power)
    announce(result, "maslov_zero", report.maslov_integers == [0, 0], f"{report.maslov_integers}")
    if model.curved:
        announce(result, "curved_connection", not report.is_flat, f"curvature {report.curvature_norm:.3e}")
        expect_error(result, "bohr_sommerfeld_not_applicable", NotApplicableError, lambda: is_bohr_sommerfeld(conn))
    else:
        announce(result, "flat_connection", report.is_flat, f"curvature {report.curvature_norm:.3e}")

    transport = verify_transport_curvature(mesh, conn)
    step = edge_lengths(mesh).max()
    bound = cfg.tolerance("transport_constant", 1.0) * step**2
    announce(result, "transport_vs_mean_curvature", transport.transport_residual < bound, f"{transport.transport_residual:.3e} < {bound:.3e}")
    match = hodge_match(mesh, transport, report)
    announce(result, "coexact_match", match.coexact_residual < tol, f"{match.coexact_residual:.3e}")

    result.documents["maslov"] = report.to_document()
    result.documents["curvature"] = transport.to_document()
    i, j = mesh.grid_indices
    result.tables["faces"] = [
        {"i": int(i[f]), "j": int(j[f]), "d_alpha": ricci.d_alpha.values[f] / areas[f], "minus_rho": ricci.ricci.values[f] / areas[f], "d_eta": curvature.values[f] / areas[f]}
        for f in range(mesh.n_faces)
    ]
    return result
