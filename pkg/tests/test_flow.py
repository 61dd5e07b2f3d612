import numpy as np
import pytest

from utils.exceptions import ModelConfigurationError, NotApplicableError, StepRejectedError
from utils.geometry.ambient import FlatComplex, FlatTorus, RoundSphere
from utils.geometry.flow import (
    deform_along,
    dilation_field,
    hamiltonian_deform,
    invariance_experiment,
    volume_descent,
)
from utils.geometry.hamiltonians import (
    ConstantFunction,
    FourierFunction,
    fourier_basis,
    hamiltonian_vector_field,
    quadratic_basis,
    random_fourier,
    rotation_generator,
    sphere_polynomial_basis,
)
from utils.geometry.lagmesh import build_loop, build_torus_grid, induced_volume
from utils.geometry.surfaces import circle, perturbed_equator, product_torus, sphere_latitude


def test_rotation_generator_flows_along_circles():
    x = np.array([[1.0, 0.0], [0.0, 2.0]])
    field = hamiltonian_vector_field(FlatComplex(1), rotation_generator(2), x)
    assert np.einsum("vi,vi->v", field, x) == pytest.approx(np.zeros(2))
    assert np.linalg.norm(field, axis=-1) == pytest.approx([1.0, 2.0])


def test_basis_sizes():
    assert len(sphere_polynomial_basis(RoundSphere(), 2)) == 9
    assert len(sphere_polynomial_basis(RoundSphere(), 3)) == 19
    assert len(fourier_basis(2, 1)) == 8
    assert len(quadratic_basis(2)) == 5
    with pytest.raises(ModelConfigurationError):
        sphere_polynomial_basis(RoundSphere(), 99)


def test_rotating_a_circle_keeps_its_index_and_length():
    mesh = build_loop(FlatComplex(1), circle(), 64)
    length, _ = induced_volume(mesh)
    moved, trace = hamiltonian_deform(mesh, rotation_generator(2), 0.05, 20)
    assert trace.stop_reason == "completed"
    assert trace.recorded_integers == [[1]] * 21
    assert induced_volume(moved)[0] == pytest.approx(length, rel=1e-3)


def test_recorded_fields_follow_every_step():
    mesh = build_loop(FlatComplex(1), circle(), 32)
    _, trace = hamiltonian_deform(mesh, rotation_generator(2), 0.05, 3, record_fields=True)
    assert len(trace.fields) == 4
    values, phase = trace.fields[0]
    assert values.shape == phase.shape == (32,)


def test_periodic_flows_keep_the_maslov_integers():
    mesh = build_loop(FlatTorus(1), circle(1.0, center=(np.pi, np.pi)), 64)
    rng = np.random.default_rng(7)
    family = [random_fourier(rng, 2, amplitude=0.05) for _ in range(3)]
    report = invariance_experiment(mesh, family, 0.02, 10, threads=2)
    assert report.initial_integers == [1]
    assert report.constant and not report.jumps and not report.aborted
    assert max(report.fractional_drift) < 1e-3
    assert len(report.traces) == 3


def test_dilating_a_latitude_changes_the_index():
    model = RoundSphere()
    mesh = build_loop(model, sphere_latitude(model, 1.2), 128)
    report = invariance_experiment(mesh, [dilation_field(-1.0)], 0.01, 40, continue_through_boundary=True, threads=1)
    assert not report.constant
    assert any(jump["before"] == [0] and jump["after"] == [1] for jump in report.jumps)
    assert any(step.note == "half_integer_boundary" for step in report.traces[0].steps)


def test_dilation_stops_at_the_boundary_by_default():
    model = RoundSphere()
    mesh = build_loop(model, sphere_latitude(model, 1.2), 128)
    report = invariance_experiment(mesh, [dilation_field(-1.0)], 0.01, 40, threads=1)
    assert report.aborted[0]["reason"] == "half_integer_boundary"
    assert report.constant


def test_coarse_steps_are_rejected():
    mesh = build_torus_grid(FlatComplex(2), product_torus(1.0, 1.0), 16, 16)
    # Re z1 + Re z2 and Im z1 + Im z2 modes: their shears do not commute
    f = FourierFunction([1.0, 1.0], [[1, 1, 0, 0], [0, 0, 1, 1]])
    with pytest.raises(StepRejectedError) as raised:
        hamiltonian_deform(mesh, f, 1.0, 5)
    assert raised.value.data["suggested_step"] == 0.5


def test_deform_along_a_custom_field():
    mesh = build_loop(FlatComplex(1), circle(), 32)
    _, trace = deform_along(mesh, dilation_field(0.5), 0.1, 4, "grow")
    assert np.all(np.diff(trace.volumes) > 0.0)
    assert trace.recorded_integers == [[1]] * 5


def test_isodrastic_descent_keeps_a_circle():
    mesh = build_loop(FlatComplex(1), circle(), 64)
    _, stationary = volume_descent(mesh, quadratic_basis(2), max_iterations=20, isodrastic=True)
    assert stationary.stop_reason == "stationary"
    _, collapse = volume_descent(mesh, quadratic_basis(2), max_iterations=200, isodrastic=False)
    assert collapse.stop_reason == "volume_collapse"
    volumes = collapse.volumes
    assert np.all(np.diff(volumes) <= 1e-9 * volumes[0])


def test_constant_hamiltonian_does_not_move_the_mesh():
    mesh = build_loop(FlatComplex(1), circle(), 32)
    moved, trace = hamiltonian_deform(mesh, ConstantFunction(3.0), 0.1, 3)
    assert moved.vertices == pytest.approx(mesh.vertices)
    assert trace.description == "constant 3"


def test_sphere_descent_reaches_a_great_circle():
    model = RoundSphere()
    mesh = build_loop(model, perturbed_equator(model, 0.05, 3), 512)
    final, trace = volume_descent(mesh, sphere_polynomial_basis(model, 3), max_iterations=200)
    assert trace.stop_reason == "converged"
    assert trace.steps[-1].l_norm < 1e-3
    assert induced_volume(final)[0] == pytest.approx(2 * np.pi, abs=1e-3)
    assert all(integers == [0] for integers in trace.recorded_integers)
    assert np.all(np.diff(trace.volumes) <= 1e-9 * trace.volumes[0])


def test_descent_refuses_a_half_integer_start():
    model = RoundSphere()
    mesh = build_loop(model, sphere_latitude(model, np.pi / 3), 256)
    with pytest.raises(NotApplicableError):
        volume_descent(mesh, sphere_polynomial_basis(model, 2), max_iterations=5)
