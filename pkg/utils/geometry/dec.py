"""Discrete exterior calculus on loop and torus-grid meshes."""

from dataclasses import dataclass
from logging import getLogger
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

import config
from utils.exceptions import CycleError, DegreeError, NumericalError
from utils.geometry.lagmesh import LOOP, Cycle, DiscreteForm, LagrangianMesh, edge_lengths, face_areas, vertex_volumes

LOGGER = getLogger(__name__)


@dataclass(frozen=True)
class HodgeSplit:
    exact: DiscreteForm
    potential: DiscreteForm
    harmonic: DiscreteForm
    coexact: DiscreteForm
    residual: float
    orthogonality: float
    iterations: int = 0

    def reconstruct(self) -> DiscreteForm:
        return self.exact + self.harmonic + self.coexact


def hodge_star(mesh: LagrangianMesh, degree: int) -> np.ndarray:
    """Diagonal Hodge star weights for `degree`-cochains (dual volume / primal volume)."""
    if degree == 0:
        return vertex_volumes(mesh)
    if degree == 1:
        lengths = edge_lengths(mesh)
        if mesh.topology == LOOP:
            return 1.0 / lengths
        n1, n2 = mesh.shape
        areas = face_areas(mesh).reshape(n1, n2)
        # s-edge (i, j) borders faces (i, j), (i, j-1); t-edge (i, j) borders (i, j), (i-1, j)
        s_area = 0.5 * (areas + np.roll(areas, 1, axis=1))
        t_area = 0.5 * (areas + np.roll(areas, 1, axis=0))
        return np.concatenate([s_area.reshape(-1), t_area.reshape(-1)]) / lengths**2
    if degree == 2 and mesh.topology != LOOP:
        return 1.0 / face_areas(mesh)
    raise DegreeError(f"no {degree}-cells on a {mesh.topology} mesh")


def inner_product(a: DiscreteForm, b: DiscreteForm) -> float:
    """L2 inner product of two forms for the induced metric."""
    a._check(b)
    return float(np.sum(hodge_star(a.mesh, a.degree) * a.values * b.values))


def _incidence(mesh: LagrangianMesh, degree: int) -> sparse.csr_matrix:
    if degree == 0:
        return mesh.d0
    if degree == 1 and mesh.topology != LOOP:
        return mesh.d1
    raise DegreeError(f"d is not defined on top-degree ({degree}) forms of a {mesh.topology} mesh")


def d(form: DiscreteForm) -> DiscreteForm:
    """Exterior derivative (coboundary)."""
    return DiscreteForm(form.mesh, form.degree + 1, _incidence(form.mesh, form.degree) @ form.values)


def codifferential(mesh: LagrangianMesh, form: DiscreteForm) -> DiscreteForm:
    """L2 adjoint of d: star^-1 d^T star."""
    if form.degree == 0:
        raise DegreeError("codifferential of a 0-form")
    incidence = _incidence(mesh, form.degree - 1)
    lowered = incidence.T @ (hodge_star(mesh, form.degree) * form.values)
    return DiscreteForm(mesh, form.degree - 1, lowered / hodge_star(mesh, form.degree - 1))


def conjugate_gradient(matrix, rhs: np.ndarray, rtol: float = None, max_iterations: int = None):
    """Jacobi-preconditioned CG for a symmetric PSD system whose kernel is the constants.

    The right-hand side must be orthogonal to the constants; the returned solution has zero mean.

    Returns:
        (solution, iterations, relative residual)
    """
    rtol = config.SOLVER_RTOL if rtol is None else rtol
    size = len(rhs)
    max_iterations = config.SOLVER_MAX_ITERATIONS_FACTOR * size if max_iterations is None else max_iterations
    rhs = rhs - rhs.mean()
    norm_b = np.linalg.norm(rhs)
    x = np.zeros(size)
    if norm_b == 0.0:
        return x, 0, 0.0
    inverse_diagonal = 1.0 / matrix.diagonal()

    def precondition(r):
        z = inverse_diagonal * r
        return z - z.mean()

    r = rhs.copy()
    z = precondition(r)
    p = z.copy()
    rz = r @ z
    k = 0
    relative = 1.0
    while k < max_iterations:
        ap = matrix @ p
        alpha = rz / (p @ ap)
        x += alpha * p
        r -= alpha * ap
        k += 1
        relative = np.linalg.norm(r) / norm_b
        if relative <= rtol:
            break
        z = precondition(r)
        rz_next = r @ z
        p = z + (rz_next / rz) * p
        rz = rz_next
    else:
        raise NumericalError(f"relative residual {relative:.3e} after {k} iterations", residual=float(relative))
    return x - x.mean(), k, float(relative)


def _loop_split(form: DiscreteForm) -> HodgeSplit:
    mesh = form.mesh
    lengths = edge_lengths(mesh)
    harmonic = lengths * (form.values.sum() / lengths.sum())
    exact = form.values - harmonic
    potential = np.concatenate([[0.0], np.cumsum(exact)[:-1]])
    weights = vertex_volumes(mesh)
    potential -= np.sum(weights * potential) / weights.sum()
    zero = DiscreteForm(mesh, 1, np.zeros(mesh.n_edges))
    return _finish(form, DiscreteForm(mesh, 1, exact), DiscreteForm(mesh, 0, potential), DiscreteForm(mesh, 1, harmonic), zero, 0)


def _torus_split(form: DiscreteForm) -> HodgeSplit:
    mesh = form.mesh
    star1 = hodge_star(mesh, 1)
    d0, d1 = mesh.d0, mesh.d1
    laplace0 = (d0.T @ sparse.diags(star1) @ d0).tocsr()
    phi, k0, _ = conjugate_gradient(laplace0, d0.T @ (star1 * form.values))
    laplace2 = (d1 @ sparse.diags(1.0 / star1) @ d1.T).tocsr()
    mu, k2, _ = conjugate_gradient(laplace2, d1 @ form.values)
    exact = d0 @ phi
    coexact = (d1.T @ mu) / star1
    harmonic = form.values - exact - coexact
    return _finish(
        form,
        DiscreteForm(mesh, 1, exact),
        DiscreteForm(mesh, 0, phi),
        DiscreteForm(mesh, 1, harmonic),
        DiscreteForm(mesh, 1, coexact),
        k0 + k2,
    )


def _finish(form, exact, potential, harmonic, coexact, iterations) -> HodgeSplit:
    mesh = form.mesh
    star1 = hodge_star(mesh, 1)
    weighted = max(np.abs(star1 * form.values).max(), 1e-300)
    # relative failure of d*h = 0 and dh = 0
    closure = np.abs(mesh.d0.T @ (star1 * harmonic.values)).max() / weighted
    if mesh.topology != LOOP:
        closure = max(closure, d(harmonic).max_abs() / max(form.max_abs(), 1e-300))
    energy = max(inner_product(form, form), 1e-300)
    parts = (exact, harmonic, coexact)
    orthogonality = max(
        abs(inner_product(parts[a], parts[b])) / energy for a in range(3) for b in range(a + 1, 3)
    )
    LOGGER.debug(f"Hodge split on {mesh.mesh_id}: {iterations} CG iterations, closure {closure:.2e}")
    return HodgeSplit(exact, potential, harmonic, coexact, float(closure), float(orthogonality), iterations)


def hodge_decompose(mesh: LagrangianMesh, one_form: DiscreteForm) -> HodgeSplit:
    """Split a 1-form into exact + harmonic + coexact parts, L2-orthogonal for the induced metric."""
    if one_form.degree != 1:
        raise DegreeError(f"Hodge decomposition needs a 1-form, got degree {one_form.degree}")
    if one_form.mesh is not mesh:
        raise DegreeError("form does not live on this mesh")
    if mesh.topology == LOOP:
        return _loop_split(one_form)
    return _torus_split(one_form)


def _check_cycle(mesh: LagrangianMesh, cycle: Cycle):
    tails = np.where(cycle.signs > 0, mesh.edge_tail[cycle.edges], mesh.edge_head[cycle.edges])
    heads = np.where(cycle.signs > 0, mesh.edge_head[cycle.edges], mesh.edge_tail[cycle.edges])
    if not np.array_equal(heads, np.roll(tails, -1)):
        broken = int(np.argmax(heads != np.roll(tails, -1)))
        raise CycleError(f"edge {int(cycle.edges[broken])} does not connect to the next one", position=broken)


def periods(one_form: DiscreteForm, cycles: Optional[Sequence[Cycle]] = None) -> np.ndarray:
    """Line integrals of a 1-form over H1 cycles (default: the mesh basis)."""
    if one_form.degree != 1:
        raise DegreeError(f"periods need a 1-form, got degree {one_form.degree}")
    mesh = one_form.mesh
    cycles = mesh.cycles if cycles is None else cycles
    result = []
    for cycle in cycles:
        _check_cycle(mesh, cycle)
        result.append(float(np.sum(cycle.signs * one_form.values[cycle.edges])))
    return np.array(result)


def seam_cocycles(mesh: LagrangianMesh) -> List[DiscreteForm]:
    """Closed integer cochains dual to the basis cycles: each is 1 on the edges crossing one seam."""
    if mesh.topology == LOOP:
        values = np.zeros(mesh.n_edges)
        values[-1] = 1.0
        return [DiscreteForm(mesh, 1, values)]
    n1, n2 = mesh.shape
    i, j = mesh.grid_indices
    zeros = np.zeros(n1 * n2)
    across_s = np.concatenate([(i == n1 - 1).astype(float), zeros])
    across_t = np.concatenate([zeros, (j == n2 - 1).astype(float)])
    return [DiscreteForm(mesh, 1, across_s), DiscreteForm(mesh, 1, across_t)]


def harmonic_basis(mesh: LagrangianMesh) -> List[DiscreteForm]:
    """Harmonic 1-forms with period matrix 2*pi*Id on the basis cycles."""
    return [2.0 * np.pi * hodge_decompose(mesh, cocycle).harmonic for cocycle in seam_cocycles(mesh)]


def harmonic_dimension(mesh: LagrangianMesh, method: str = "graph") -> int:
    """Dimension of the harmonic space: from graph connectivity or from a dense SVD rank."""
    if method == "svd":
        star1 = hodge_star(mesh, 1)
        blocks = [(mesh.d0.T @ sparse.diags(star1)).toarray()]
        if mesh.topology != LOOP:
            blocks.append(mesh.d1.toarray())
        operator = np.vstack(blocks)
        singular = np.linalg.svd(operator, compute_uv=False)
        rank = int(np.sum(singular > singular.max() * 1e-10))
        return mesh.n_edges - rank
    vertex_parts, _ = connected_components(mesh.d0.T @ mesh.d0, directed=False)
    rank = mesh.n_vertices - vertex_parts
    if mesh.topology != LOOP:
        face_parts, _ = connected_components(mesh.d1 @ mesh.d1.T, directed=False)
        rank += mesh.n_faces - face_parts
    return mesh.n_edges - rank
