import numpy as np
import pytest

from utils.exceptions import DegreeError, DimensionError, MeshError, NotLagrangianError
from utils.geometry.ambient import FlatComplex, FlatTorus, RoundSphere
from utils.geometry.lagmesh import (
    DiscreteForm,
    build_loop,
    build_torus_grid,
    complex_frame,
    face_areas,
    induced_volume,
    lagrangian_residual,
    load_mesh,
    orthonormal_tangent_frames,
    save_mesh,
    vertex_volumes,
)
from utils.geometry.surfaces import (
    circle,
    graph_torus,
    legendre_torus,
    potential_torus_model,
    product_torus,
    sphere_latitude,
    straight_line,
    tilted_torus,
)


def flat_torus_mesh(n=16, r1=1.0, r2=2.0):
    return build_torus_grid(FlatComplex(2), product_torus(r1, r2), n, n)


def test_circle_length_is_the_inscribed_polygon():
    n = 64
    length, density = induced_volume(build_loop(FlatComplex(1), circle(), n))
    assert length == pytest.approx(2 * n * np.sin(np.pi / n), rel=1e-12)
    assert density.degree == 1


def test_vertex_volumes_sum_to_total():
    mesh = flat_torus_mesh()
    total, _ = induced_volume(mesh)
    assert vertex_volumes(mesh).sum() == pytest.approx(total)


def test_product_torus_area():
    mesh = flat_torus_mesh(32)
    chord = 2 * 32 * np.sin(np.pi / 32)
    assert face_areas(mesh).sum() == pytest.approx(chord * 2.0 * chord, rel=1e-12)


def test_product_torus_is_lagrangian():
    mesh = flat_torus_mesh()
    assert lagrangian_residual(mesh).max() < 1e-10
    assert lagrangian_residual(mesh, discrete=True).max() < 1e-10


def test_tilted_torus_is_rejected():
    with pytest.raises(NotLagrangianError) as raised:
        build_torus_grid(FlatComplex(2), tilted_torus(0.1), 16, 16)
    assert raised.value.data["residual"] > 1e-3


def test_graph_torus_is_lagrangian():
    mesh = build_torus_grid(FlatComplex(2), graph_torus(0.2), 16, 16)
    assert lagrangian_residual(mesh).max() < 1e-8


def test_legendre_torus_is_lagrangian_for_the_curved_form():
    model = potential_torus_model(0.05)
    mesh = build_torus_grid(model, legendre_torus(model), 24, 24)
    assert lagrangian_residual(mesh).max() < 1e-6


def test_loop_needs_complex_dimension_one():
    with pytest.raises(DimensionError):
        build_loop(FlatComplex(2), lambda t: np.zeros((len(t), 4)), 32)


def test_too_few_vertices():
    with pytest.raises(MeshError):
        build_loop(FlatComplex(1), circle(), 8)


def test_repeated_vertices_are_rejected():
    with pytest.raises(MeshError):
        build_loop(FlatComplex(1), circle(turns=2), 32)


def test_open_curve_is_rejected():
    with pytest.raises(MeshError):
        build_loop(FlatComplex(1), lambda t: np.stack([t, t**2], axis=-1), 32)


def test_line_on_elliptic_curve_closes_up_to_a_lattice_vector():
    mesh = build_loop(FlatTorus(1), straight_line(), 32)
    assert mesh.shifts[0] == pytest.approx([2 * np.pi, 0.0])
    assert np.linalg.norm(mesh.edge_vectors, axis=-1) == pytest.approx(np.full(32, 2 * np.pi / 32))


def test_large_latitude_moves_to_the_antipodal_chart():
    model = RoundSphere()
    mesh = build_loop(model, sphere_latitude(model, 3.0), 64)
    assert mesh.model.chart == "antipodal"
    assert np.abs(mesh.vertices).max() < 1.0


def test_incidence_matrices_compose_to_zero():
    mesh = flat_torus_mesh()
    assert abs(mesh.d1 @ mesh.d0).max() == 0.0
    assert mesh.n_edges == 2 * mesh.n_vertices
    assert mesh.cell_count(2) == mesh.n_faces


def test_basis_cycles_are_closed_paths():
    mesh = flat_torus_mesh()
    for cycle in mesh.cycles:
        assert np.array_equal(mesh.edge_head[cycle.edges], np.roll(mesh.edge_tail[cycle.edges], -1))


def test_loop_has_no_two_forms():
    mesh = build_loop(FlatComplex(1), circle(), 32)
    with pytest.raises(DegreeError):
        mesh.cell_count(2)
    with pytest.raises(DegreeError):
        DiscreteForm(mesh, 1, np.zeros(5))


def test_form_arithmetic_stays_on_its_mesh():
    mesh = build_loop(FlatComplex(1), circle(), 32)
    other = build_loop(FlatComplex(1), circle(2.0), 32)
    a = DiscreteForm(mesh, 1, np.ones(32))
    assert (2 * a - a).values == pytest.approx(np.ones(32))
    with pytest.raises(DegreeError):
        a + DiscreteForm(other, 1, np.ones(32))


def test_tangent_frames_are_unitary_on_a_lagrangian():
    frames = orthonormal_tangent_frames(flat_torus_mesh()).frames
    w = complex_frame(frames)
    product = np.conj(np.swapaxes(w, 1, 2)) @ w
    assert product == pytest.approx(np.broadcast_to(np.eye(2), product.shape), abs=1e-12)


def test_reversed_loop_runs_backwards():
    mesh = build_loop(FlatComplex(1), circle(), 32)
    back = mesh.reversed()
    assert back.vertices[0] == pytest.approx(mesh.vertices[-1])
    assert back.mesh_id != mesh.mesh_id


def test_mesh_round_trip(tmp_path):
    mesh = build_loop(FlatTorus(1), straight_line(), 32)
    path = tmp_path / "mesh.json"
    save_mesh(mesh, str(path))
    restored = load_mesh(str(path))
    assert restored.mesh_id == mesh.mesh_id
    assert restored.shifts == pytest.approx(mesh.shifts)
    assert restored.model.kind == "flat_torus"


def test_volume_errors_quarter_when_the_resolution_doubles():
    model = RoundSphere()
    latitude = [abs(induced_volume(build_loop(model, sphere_latitude(model, 1.0), n))[0] - 2 * np.pi * np.sin(1.0)) for n in (64, 128)]
    assert 3.0 <= latitude[0] / latitude[1] <= 5.0
    exact = 4 * np.pi**2 * 2.0
    torus = [abs(induced_volume(flat_torus_mesh(n))[0] - exact) for n in (16, 32)]
    assert 3.0 <= torus[0] / torus[1] <= 5.0
