import numpy as np
import pytest

from utils.exceptions import (
    HalfIntegerBoundaryError,
    NotApplicableError,
    UnresolvedMeshError,
    UnsupportedModelError,
)
from utils.geometry.ambient import FlatComplex, FlatTorus, RoundSphere, metric_at
from utils.geometry.dec import periods
from utils.geometry.lagmesh import build_loop, build_torus_grid, orthonormal_tangent_frames
from utils.geometry.surfaces import (
    circle,
    legendre_torus,
    potential_torus_model,
    product_torus,
    sphere_latitude,
    straight_line,
    wiggly_line,
)
from utils.geometry.transport import (
    connection_curvature,
    decompose_connection,
    half_weight,
    imtheta_zero_set,
    is_bohr_sommerfeld,
    parallel_transport_edge,
    relative_connection,
)


def unit_circle(n=128):
    return build_loop(FlatComplex(1), circle(), n)


def test_flat_transport_is_the_identity():
    frame = np.array([[0.6], [0.8]])
    moved = parallel_transport_edge(FlatComplex(1), np.zeros(2), np.array([0.5, 0.2]), frame)
    assert moved == pytest.approx(frame)


def test_circle_angles_sum_to_two_pi():
    conn = relative_connection(unit_circle())
    assert conn.eta.values.sum() == pytest.approx(2 * np.pi, abs=1e-9)
    assert conn.eta.values == pytest.approx(np.full(128, 2 * np.pi / 128))
    assert conn.resolved


def test_circle_maslov_index():
    conn = relative_connection(unit_circle())
    assert decompose_connection(conn).maslov_integers == [1]
    assert decompose_connection(conn, power=2).maslov_integers == [2]


def test_reversed_circle_has_opposite_index():
    conn = relative_connection(unit_circle().reversed())
    assert decompose_connection(conn).maslov_integers == [-1]


def test_circle_is_bohr_sommerfeld_but_not_special():
    conn = relative_connection(unit_circle())
    report = decompose_connection(conn)
    assert report.is_flat and report.trivial_periods
    assert not report.is_special
    assert is_bohr_sommerfeld(conn).is_bohr_sommerfeld
    assert report.phase_variation < 1e-9


def test_zero_set_count_matches_maslov_index():
    mesh = unit_circle()
    assert imtheta_zero_set(mesh).counts == [1]
    assert imtheta_zero_set(mesh, power=2).counts == [2]


def test_product_torus_maslov_class():
    mesh = build_torus_grid(FlatComplex(2), product_torus(1.0, 2.0), 24, 24)
    conn = relative_connection(mesh)
    assert connection_curvature(conn).max_abs() < 1e-10
    report = decompose_connection(conn)
    assert report.maslov_integers == [1, 1]
    assert decompose_connection(conn, power=2).maslov_integers == [2, 2]
    assert imtheta_zero_set(mesh).counts == [1, 1]
    assert is_bohr_sommerfeld(conn).is_bohr_sommerfeld


def test_straight_line_is_special():
    mesh = build_loop(FlatTorus(1), straight_line(), 64)
    report = decompose_connection(relative_connection(mesh))
    assert report.maslov_integers == [0]
    assert report.is_special
    count = imtheta_zero_set(mesh)
    assert count.counts == [0]
    assert count.retries >= 1


def test_latitude_period_is_two_pi_cos_theta():
    model = RoundSphere()
    mesh = build_loop(model, sphere_latitude(model, 0.8), 512)
    conn = relative_connection(mesh)
    assert periods(conn.eta)[0] == pytest.approx(2 * np.pi * np.cos(0.8), abs=1e-3)
    assert decompose_connection(conn).maslov_integers == [1]


def test_half_integer_latitude_is_guarded():
    model = RoundSphere()
    conn = relative_connection(build_loop(model, sphere_latitude(model, np.pi / 3), 256))
    with pytest.raises(HalfIntegerBoundaryError) as raised:
        decompose_connection(conn)
    assert abs(raised.value.data["fractional_periods"][0]) == pytest.approx(0.5, abs=1e-3)
    report = decompose_connection(conn, strict_boundary=False)
    assert not report.bounded_periods
    assert report.maslov_integers is None and report.phase is None
    assert report.to_document().maslov_integers is None
    assert not report.is_special
    with pytest.raises(NotApplicableError):
        half_weight(report, conn.mesh, 1.0)
    defect = is_bohr_sommerfeld(conn).defects[0]
    assert defect == pytest.approx(np.pi, abs=1e-2)


def test_sphere_has_no_zero_set_count():
    model = RoundSphere()
    with pytest.raises(UnsupportedModelError):
        imtheta_zero_set(build_loop(model, sphere_latitude(model, 1.0), 64))


def test_curved_connection_is_not_bohr_sommerfeld_checkable():
    model = potential_torus_model(0.05)
    conn = relative_connection(build_torus_grid(model, legendre_torus(model), 24, 24))
    with pytest.raises(NotApplicableError):
        is_bohr_sommerfeld(conn)


def test_flipped_frames_are_unresolved():
    mesh = unit_circle(64)
    frames = orthonormal_tangent_frames(mesh).frames.copy()
    frames[1::2] *= -1.0
    with pytest.raises(UnresolvedMeshError):
        relative_connection(mesh, frames)
    conn = relative_connection(mesh, frames, strict=False)
    assert not conn.resolved


def test_half_weight_on_a_special_line_is_constant():
    mesh = build_loop(FlatTorus(1), straight_line(), 64)
    report = decompose_connection(relative_connection(mesh))
    weight = half_weight(report, mesh, 2.0)
    assert weight.total == pytest.approx(2.0, abs=1e-12)
    assert np.ptp(weight.density.values) < 1e-12
    assert not weight.sign_warning


def test_half_weight_on_a_wiggly_line():
    mesh = build_loop(FlatTorus(1), wiggly_line(0.3), 256)
    report = decompose_connection(relative_connection(mesh))
    assert report.maslov_integers == [0]
    assert report.phase_variation > 0.1
    for r in (0.5, 1.0, 10.0):
        assert half_weight(report, mesh, r).total == pytest.approx(r, abs=1e-8)
    assert half_weight(report, mesh, 0.01).sign_warning
    assert not half_weight(report, mesh, 10.0).sign_warning


def test_half_weight_needs_trivial_class_and_positive_total():
    mesh = unit_circle()
    report = decompose_connection(relative_connection(mesh))
    with pytest.raises(NotApplicableError):
        half_weight(report, mesh, 1.0)
    line = build_loop(FlatTorus(1), straight_line(), 64)
    line_report = decompose_connection(relative_connection(line))
    with pytest.raises(NotApplicableError):
        half_weight(line_report, line, 0.0)


def random_rotations(rng, count):
    angles = rng.uniform(0.0, 2 * np.pi, size=count)
    c, s = np.cos(angles), np.sin(angles)
    return np.stack([np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2)


def test_connection_ignores_the_choice_of_tangent_frames():
    model = potential_torus_model(0.05)
    mesh = build_torus_grid(model, legendre_torus(model), 24, 24)
    frames = orthonormal_tangent_frames(mesh).frames
    reference = relative_connection(mesh, frames)
    report = decompose_connection(reference)
    rng = np.random.default_rng(8)
    for _ in range(5):
        rotated = relative_connection(mesh, frames @ random_rotations(rng, mesh.n_vertices))
        assert np.abs(rotated.eta.values - reference.eta.values).max() < 1e-10
        assert periods(rotated.eta) == pytest.approx(periods(reference.eta), abs=1e-10)
        assert decompose_connection(rotated).maslov_integers == report.maslov_integers


def test_transport_there_and_back_returns_the_frame():
    model = potential_torus_model(0.05)
    p = np.array([0.3, 0.5, 1.1, 0.2])
    q = p + np.array([0.04, -0.03, 0.02, 0.05])
    chol = np.linalg.cholesky(metric_at(model, p))
    frame = np.linalg.solve(chol.T, np.linalg.qr(np.random.default_rng(9).normal(size=(4, 2)))[0])
    there = parallel_transport_edge(model, p, q, frame)
    back = parallel_transport_edge(model, q, p, there)
    assert back == pytest.approx(frame, abs=1e-7)
    sphere = RoundSphere()
    vector = np.array([1.0, 0.0]) / np.sqrt(metric_at(sphere, np.array([0.05, 0.1]))[0, 0])
    returned = parallel_transport_edge(sphere, np.array([0.05, 0.1]), np.array([0.1, 0.05]), vector)
    assert parallel_transport_edge(sphere, np.array([0.1, 0.05]), np.array([0.05, 0.1]), returned) == pytest.approx(vector, abs=1e-8)


@pytest.mark.parametrize("theta", [0.6, 1.0, 2.0])
def test_sphere_holonomy_is_the_enclosed_area(theta):
    mesh = build_loop(RoundSphere(), sphere_latitude(RoundSphere(), theta), 512)
    model = mesh.model
    points = np.vstack([mesh.vertices, mesh.vertices[:1]])
    g = metric_at(model, points[0])
    start = np.array([1.0, 0.0]) / np.sqrt(g[0, 0])
    vector = start
    for p, q in zip(points[:-1], points[1:]):
        vector = parallel_transport_edge(model, p, q, vector)
    turned = model.J @ start
    angle = np.arctan2(turned @ g @ vector, start @ g @ vector)
    area = 2 * np.pi * (1 - np.cos(theta))
    assert np.cos(angle) == pytest.approx(np.cos(area), abs=1e-3)
    assert abs(np.sin(angle)) == pytest.approx(abs(np.sin(area)), abs=1e-3)
