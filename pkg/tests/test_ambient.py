import numpy as np
import pytest

from utils.exceptions import DimensionError, DomainError, ModelConfigurationError, UnsupportedModelError
from utils.geometry.ambient import (
    FlatComplex,
    FlatTorus,
    FootballSphere,
    PotentialKahler,
    RoundSphere,
    antipodal_remap,
    christoffels_at,
    einstein_ratio,
    exterior_derivative_residual,
    holomorphic_volume_at,
    load_model,
    metric_at,
    ricci_form_at,
    symplectic_form_at,
)
from utils.geometry.surfaces import fibre_modes, potential_torus_model
from utils.models.ambient_model import FourierModeSchema


def test_flat_symplectic_form_is_dx_wedge_dy():
    omega = symplectic_form_at(FlatComplex(1), np.array([0.3, -0.2]))
    assert omega == pytest.approx(np.array([[0.0, 1.0], [-1.0, 0.0]]))


def test_flat_model_has_no_curvature():
    model = FlatComplex(2)
    p = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.abs(christoffels_at(model, p)).max() == 0.0
    assert np.abs(ricci_form_at(model, p)).max() == 0.0
    assert holomorphic_volume_at(model, p) == 1.0


def test_round_sphere_metric_at_chart_origin():
    assert metric_at(RoundSphere(2.0), np.zeros(2)) == pytest.approx(16.0 * np.eye(2))


def test_round_sphere_is_kahler_einstein():
    rng = np.random.default_rng(1)
    ratios = einstein_ratio(RoundSphere(2.0), rng.uniform(-1.5, 1.5, size=(20, 2)))
    assert ratios == pytest.approx(np.full(20, 0.25), abs=1e-5)


def test_football_sphere_is_not_einstein():
    rng = np.random.default_rng(2)
    ratios = einstein_ratio(FootballSphere(1.0, 0.3), rng.uniform(-1.5, 1.5, size=(20, 2)))
    assert np.ptp(ratios) > 1e-3


def test_sphere_has_no_holomorphic_volume():
    with pytest.raises(UnsupportedModelError):
        holomorphic_volume_at(RoundSphere(), np.zeros(2))


def test_sphere_chart_round_trip():
    model = RoundSphere()
    x = np.array([[0.3, -0.4], [1.5, 2.0], [-0.1, 0.05]])
    u, jac = model.embed(x)
    assert np.linalg.norm(u, axis=-1) == pytest.approx(np.ones(3))
    assert model.chart_point(u) == pytest.approx(x)
    assert jac.shape == (3, 3, 2)


def test_antipodal_remap_is_an_involution():
    x = np.array([[0.3, -0.4], [2.0, 1.0]])
    assert antipodal_remap(antipodal_remap(x)) == pytest.approx(x)


def test_sphere_chart_bound():
    with pytest.raises(DomainError):
        RoundSphere().metric(np.array([[5e3, 0.0]]))


def test_point_shape_is_checked():
    with pytest.raises(DimensionError):
        FlatComplex(2).metric(np.zeros((3, 2)))


def test_potential_model_forms_are_closed():
    model = potential_torus_model(0.05)
    points = np.random.default_rng(3).uniform(0.0, 2.0 * np.pi, size=(16, 4))
    assert exterior_derivative_residual(model, points, "symplectic") < 1e-6
    assert model.curved


def test_potential_model_rejects_lost_positivity():
    with pytest.raises(ModelConfigurationError):
        PotentialKahler(FlatTorus(2), fibre_modes(), 5.0)


def test_potential_model_rejects_non_periodic_modes():
    modes = [FourierModeSchema(amplitude=1.0, wave_vector=[0.0, 0.0, 0.5, 0.0])]
    with pytest.raises(ModelConfigurationError):
        PotentialKahler(FlatTorus(2), modes, 0.01)


def test_models_round_trip_through_documents():
    points = np.random.default_rng(4).uniform(-1.0, 1.0, size=(5, 4))
    model = potential_torus_model(0.05)
    restored = load_model(model.to_document().model_dump())
    assert restored.metric(points) == pytest.approx(model.metric(points))
    football = FootballSphere(1.5, 0.2)
    assert load_model(football.to_document()).metric(points[:, :2]) == pytest.approx(football.metric(points[:, :2]))


@pytest.mark.parametrize("model", [RoundSphere(1.5), FootballSphere(1.0, 0.3), potential_torus_model(0.05)], ids=repr)
def test_metric_symplectic_and_complex_structure_agree(model):
    rng = np.random.default_rng(5)
    points = rng.uniform(0.1, 1.2, size=(8, model.dim_real))
    g = metric_at(model, points)
    omega = symplectic_form_at(model, points)
    x, y = rng.normal(size=(2, 8, model.dim_real))
    turned_y = y @ model.J.T
    assert model.J @ model.J == pytest.approx(-np.eye(model.dim_real))
    assert np.einsum("mi,mij,mj->m", x, omega, turned_y) == pytest.approx(np.einsum("mi,mij,mj->m", x, g, y))
    assert np.einsum("mi,mij,mj->m", x @ model.J.T, g, turned_y) == pytest.approx(np.einsum("mi,mij,mj->m", x, g, y))


@pytest.mark.parametrize("model", [RoundSphere(), potential_torus_model(0.05)], ids=repr)
def test_christoffels_are_metric_compatible(model):
    points = np.random.default_rng(6).uniform(0.2, 1.0, size=(6, model.dim_real))
    gamma = christoffels_at(model, points)
    assert gamma == pytest.approx(np.swapaxes(gamma, 2, 3), abs=1e-12)
    step = 1e-5
    g = metric_at(model, points)
    for l in range(model.dim_real):
        shift = np.zeros(model.dim_real)
        shift[l] = step
        dg = (metric_at(model, points + shift) - metric_at(model, points - shift)) / (2 * step)
        # d_l G_ij = G_kj Gamma^k_li + G_ik Gamma^k_lj
        lowered = np.einsum("mkj,mki->mij", g, gamma[:, :, l, :])
        assert dg == pytest.approx(lowered + np.swapaxes(lowered, 1, 2), abs=1e-6)
