import numpy as np
import pytest

from utils.exceptions import CycleError, DegreeError, NumericalError
from utils.geometry.ambient import FlatComplex
from utils.geometry.dec import (
    codifferential,
    conjugate_gradient,
    d,
    harmonic_basis,
    harmonic_dimension,
    hodge_decompose,
    hodge_star,
    inner_product,
    periods,
)
from utils.geometry.lagmesh import Cycle, DiscreteForm, build_loop, build_torus_grid, vertex_volumes
from utils.geometry.surfaces import circle, product_torus
from scipy import sparse


def torus(n=16):
    return build_torus_grid(FlatComplex(2), product_torus(1.0, 1.5), n, n)


def loop(n=64):
    return build_loop(FlatComplex(1), circle(), n)


def test_d_of_d_vanishes():
    mesh = torus()
    f = DiscreteForm(mesh, 0, np.random.default_rng(0).normal(size=mesh.n_vertices))
    assert d(d(f)).max_abs() < 1e-12


def test_hodge_star_of_vertices_is_the_dual_volume():
    mesh = torus()
    assert hodge_star(mesh, 0) == pytest.approx(vertex_volumes(mesh))


def test_codifferential_of_exact_form_is_laplacian_of_potential():
    mesh = loop()
    f = DiscreteForm(mesh, 0, np.cos(2 * np.pi * np.arange(64) / 64))
    co = codifferential(mesh, d(f))
    assert inner_product(co, DiscreteForm(mesh, 0, np.ones(64))) == pytest.approx(0.0, abs=1e-12)
    assert co.max_abs() > 0.0


def test_random_form_splits_orthogonally_on_the_torus():
    mesh = torus()
    form = DiscreteForm(mesh, 1, np.random.default_rng(1).normal(size=mesh.n_edges))
    split = hodge_decompose(mesh, form)
    assert split.reconstruct().values == pytest.approx(form.values, abs=1e-10)
    assert split.orthogonality < 1e-9
    assert split.residual < 1e-8
    assert d(split.harmonic).max_abs() < 1e-8


def test_exact_form_has_no_harmonic_part():
    mesh = torus()
    f = DiscreteForm(mesh, 0, np.random.default_rng(2).normal(size=mesh.n_vertices))
    split = hodge_decompose(mesh, d(f))
    assert split.harmonic.max_abs() < 1e-8
    assert periods(d(f)) == pytest.approx(np.zeros(2), abs=1e-12)


def test_loop_split_keeps_the_period():
    mesh = loop()
    form = DiscreteForm(mesh, 1, np.random.default_rng(3).normal(size=64))
    split = hodge_decompose(mesh, form)
    assert periods(split.harmonic) == pytest.approx(periods(form))
    assert split.coexact.max_abs() == 0.0
    assert split.reconstruct().values == pytest.approx(form.values)


def test_harmonic_basis_has_period_matrix_two_pi():
    mesh = torus()
    matrix = np.array([periods(h) for h in harmonic_basis(mesh)])
    assert matrix == pytest.approx(2 * np.pi * np.eye(2), abs=1e-8)


def test_harmonic_dimension_equals_first_betti_number():
    assert harmonic_dimension(torus(), "graph") == 2
    assert harmonic_dimension(torus(), "svd") == 2
    assert harmonic_dimension(loop(), "svd") == 1


def test_decompose_needs_a_one_form():
    mesh = torus()
    with pytest.raises(DegreeError):
        hodge_decompose(mesh, DiscreteForm(mesh, 0, np.zeros(mesh.n_vertices)))


def test_periods_reject_broken_cycles():
    mesh = torus()
    form = DiscreteForm(mesh, 1, np.ones(mesh.n_edges))
    broken = Cycle(np.array([0, 1, 2]), np.ones(3), np.array([0, 1, 2]))
    with pytest.raises(CycleError):
        periods(form, [broken])


def test_conjugate_gradient_reports_non_convergence():
    n = 50
    laplace = sparse.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tocsr()
    rhs = np.sin(np.linspace(0, np.pi, n))
    rhs -= rhs.mean()
    with pytest.raises(NumericalError):
        conjugate_gradient(laplace, rhs, rtol=1e-14, max_iterations=2)
