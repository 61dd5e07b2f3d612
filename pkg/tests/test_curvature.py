import numpy as np
import pytest

from utils.exceptions import DegreeError, NotApplicableError, RefinementError
from utils.geometry.ambient import FlatComplex, FlatTorus, RoundSphere
from utils.geometry.curvature import (
    ConvergenceTable,
    convergence_study,
    corollary_checks,
    hodge_match,
    mean_curvature_one_form,
    minimality_report,
    second_fundamental_form,
    verify_transport_curvature,
    verify_ricci_identity,
)
from utils.geometry.dec import periods
from utils.geometry.lagmesh import build_loop, build_torus_grid
from utils.geometry.surfaces import (
    circle,
    legendre_torus,
    potential_torus_model,
    product_torus,
    sphere_latitude,
    straight_line,
    wiggly_line,
)
from utils.geometry.transport import decompose_connection, relative_connection


def unit_circle(n=128):
    return build_loop(FlatComplex(1), circle(), n)


def test_circle_mean_curvature_form():
    n = 256
    alpha = mean_curvature_one_form(unit_circle(n))
    assert alpha.values == pytest.approx(np.full(n, 2 * np.tan(np.pi / n)))
    assert periods(alpha)[0] == pytest.approx(2 * np.pi, abs=1e-3)


def test_circle_transport_matches_mean_curvature_to_second_order():
    n = 128
    h = 2 * np.pi / n
    report = verify_transport_curvature(unit_circle(n))
    assert report.transport_residual == pytest.approx(h**2 / 12, rel=0.05)
    assert report.ricci_residual is None
    assert not report.minimality.l_minimal
    assert report.minimality.h_minimal


def test_circle_hodge_match_and_corollaries():
    mesh = unit_circle()
    report = verify_transport_curvature(mesh)
    maslov = decompose_connection(report.connection)
    match = hodge_match(mesh, report, maslov)
    assert match.consistent
    assert match.coexact_residual == 0.0
    assert match.maslov_integers == [1]
    assert all(corollary_checks(report.minimality, maslov).values())


def test_straight_line_is_l_minimal():
    mesh = build_loop(FlatTorus(1), straight_line(), 64)
    minimality = minimality_report(mesh)
    assert minimality.l_minimal and minimality.h_minimal
    maslov = decompose_connection(relative_connection(mesh))
    checks = corollary_checks(minimality, maslov)
    assert checks == {"l_minimal_iff_special_data": True, "h_minimal_iff_l_minimal": True}


def test_wiggly_line_is_neither_l_nor_h_minimal():
    minimality = minimality_report(build_loop(FlatTorus(1), wiggly_line(0.3), 256))
    assert not minimality.l_minimal
    assert not minimality.h_minimal


def test_equator_is_l_minimal_and_latitudes_are_h_minimal():
    model = RoundSphere()
    equator = minimality_report(build_loop(model, sphere_latitude(model, 0.5 * np.pi), 512))
    assert equator.l_minimal
    latitude = minimality_report(build_loop(model, sphere_latitude(model, np.pi / 3), 512))
    assert not latitude.l_minimal
    assert latitude.h_minimal


def test_latitude_mean_curvature_period():
    model = RoundSphere()
    alpha = mean_curvature_one_form(build_loop(model, sphere_latitude(model, 1.0), 512))
    assert periods(alpha)[0] == pytest.approx(2 * np.pi * np.cos(1.0), abs=1e-3)


def test_coarse_wiggles_ask_for_refinement():
    with pytest.raises(RefinementError):
        second_fundamental_form(build_loop(FlatTorus(1), wiggly_line(0.3, 5), 16))


def test_ricci_identity_needs_two_cells():
    with pytest.raises(DegreeError):
        verify_ricci_identity(unit_circle())


def test_flat_torus_ricci_identity_is_exact():
    mesh = build_torus_grid(FlatComplex(2), product_torus(1.0, 2.0), 24, 24)
    check = verify_ricci_identity(mesh)
    assert check.residual < 1e-9
    assert np.abs(check.ricci.values).max() == 0.0


def test_curved_torus_ricci_residual_decreases_under_refinement():
    model = potential_torus_model(0.05)
    param = legendre_torus(model)
    coarse = verify_ricci_identity(build_torus_grid(model, param, 24, 24))
    fine = verify_ricci_identity(build_torus_grid(model, param, 48, 48))
    assert np.abs(fine.ricci.values).max() > 0.0
    assert fine.residual < coarse.residual / 2


def test_convergence_study_observes_second_order():
    model = FlatComplex(1)
    table = convergence_study(
        lambda n: build_loop(model, circle(), n),
        [32, 64, 128],
        {"transport": lambda mesh: verify_transport_curvature(mesh).transport_residual},
    )
    assert table.orders["transport"] == pytest.approx([2.0, 2.0], abs=0.1)
    assert [row.resolution for row in table.to_document().rows] == [32, 64, 128]


def test_convergence_orders_skip_zero_residuals():
    table = ConvergenceTable([16, 32], {"exact": [0.0, 0.0]})
    assert np.isnan(table.orders["exact"][0])


def test_coarse_flat_tori_need_no_refinement():
    for radii, n in (((1.0, 1.0), 16), ((1.0, 2.0), 24)):
        sff = second_fundamental_form(build_torus_grid(FlatComplex(2), product_torus(*radii), n, n))
        assert np.isfinite(sff.mean_curvature).all()


def test_hodge_match_needs_maslov_integers():
    model = RoundSphere()
    mesh = build_loop(model, sphere_latitude(model, np.pi / 3), 256)
    report = verify_transport_curvature(mesh)
    boundary = decompose_connection(report.connection, strict_boundary=False)
    with pytest.raises(NotApplicableError):
        hodge_match(mesh, report, boundary)
