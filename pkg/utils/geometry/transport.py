"""Levi-Civita transport and the determinant U(1) connection of a Lagrangian mesh.

Edge angles follow eta_e = -arg det U_e, where U_e compares the frame transported along
edge e with the reference frame at its head. On the counter-clockwise unit circle the
angles sum to +2*pi.
"""

from dataclasses import dataclass
from logging import getLogger
from typing import List, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import breadth_first_order

import config
from utils.exceptions import (
    DegreeError,
    HalfIntegerBoundaryError,
    NotApplicableError,
    NumericalError,
    RefinementError,
    UnresolvedMeshError,
    UnsupportedModelError,
)
from utils.geometry.ambient import AmbientModel
from utils.geometry.dec import d, harmonic_basis, hodge_decompose, inner_product, periods
from utils.geometry.lagmesh import (
    LOOP,
    DiscreteForm,
    LagrangianMesh,
    complex_frame,
    face_areas,
    induced_volume,
    orthonormal_tangent_frames,
    vertex_volumes,
)
from utils.models.report_model import MaslovReportDocument

LOGGER = getLogger(__name__)


@dataclass(frozen=True)
class RelativeConnection:
    mesh: LagrangianMesh
    eta: DiscreteForm
    unresolved: np.ndarray  # per-edge flag, |eta_e| above the resolution guard
    frames: np.ndarray

    @property
    def resolved(self) -> bool:
        return not bool(self.unresolved.any())


@dataclass(frozen=True)
class MaslovReport:
    mesh: LagrangianMesh
    power: int
    maslov_integers: Optional[List[int]]
    periods: np.ndarray
    harmonic_periods: np.ndarray
    fractional_periods: np.ndarray
    curvature_norm: float
    coexact_norm: float
    delta1: DiscreteForm
    delta2: DiscreteForm
    winding: DiscreteForm
    phase: Optional[DiscreteForm]
    is_flat: bool
    trivial_periods: bool
    bounded_periods: bool
    is_bohr_sommerfeld: bool
    is_special: bool

    @property
    def phase_variation(self) -> Optional[float]:
        if self.phase is None:
            return None
        return float(np.ptp(self.phase.values))

    @property
    def trivial_maslov_class(self) -> bool:
        return self.maslov_integers is not None and all(m == 0 for m in self.maslov_integers)

    def to_document(self) -> MaslovReportDocument:
        return MaslovReportDocument(
            mesh_id=self.mesh.mesh_id,
            power=self.power,
            maslov_integers=self.maslov_integers,
            periods=self.periods.tolist(),
            fractional_periods=self.fractional_periods.tolist(),
            curvature_norm=self.curvature_norm,
            coexact_norm=self.coexact_norm,
            is_flat=self.is_flat,
            trivial_periods=self.trivial_periods,
            bounded_periods=self.bounded_periods,
            is_bohr_sommerfeld=self.is_bohr_sommerfeld,
            is_special=self.is_special,
            phase_variation=self.phase_variation,
            phase=None if self.phase is None else self.phase.values.tolist(),
        )


@dataclass(frozen=True)
class BohrSommerfeldCheck:
    level: int
    is_bohr_sommerfeld: bool
    defects: np.ndarray
    curvature_norm: float


@dataclass(frozen=True)
class ZeroSetCount:
    counts: List[int]
    crossings: List[np.ndarray]  # positions along each cycle where Im theta changes sign
    retries: int


@dataclass(frozen=True)
class HalfWeight:
    density: DiscreteForm
    total: float
    constant: float
    sign_warning: bool


def _orthonormalize(model: AmbientModel, points: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """Loewdin step: F (F^T G F)^(-1/2), the closest G-orthonormal frame."""
    g = model.metric(points)
    gram = np.einsum("mia,mij,mjb->mab", frames, g, frames)
    values, vectors = np.linalg.eigh(gram)
    inverse_root = np.einsum("mab,mb,mcb->mac", vectors, 1.0 / np.sqrt(values), vectors)
    return frames @ inverse_root


def transport_frames(model: AmbientModel, p: np.ndarray, q: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """Batched transport of frames[m] (2n x k columns) along the chords p[m] -> q[m]."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    frames = np.asarray(frames, dtype=float)
    delta = q - p
    if not model.curved:
        return frames.copy()

    def velocity(tau, v):
        gamma = model.christoffels(p + tau * delta)
        return -np.einsum("mkij,mi,mja->mka", gamma, delta, v)

    gamma0 = model.christoffels(p)
    strength = np.abs(np.einsum("mkij,mi->mkj", gamma0, delta)).max(initial=0.0)
    if strength > 1.0:
        raise RefinementError(f"transport step too large (|Gamma dx| = {strength:.3g})")
    k1 = velocity(0.0, frames)
    k2 = velocity(0.5, frames + 0.5 * k1)
    k3 = velocity(0.5, frames + 0.5 * k2)
    k4 = velocity(1.0, frames + k3)
    moved = frames + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return _orthonormalize(model, q, moved)


def parallel_transport_edge(model: AmbientModel, p: np.ndarray, q: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Levi-Civita transport of an orthonormal frame along the chord p -> q (one RK4 step)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    frame = np.asarray(frame, dtype=float)
    if np.array_equal(p, q):
        return frame.copy()
    single = frame.ndim == 1
    columns = frame[:, None] if single else frame
    moved = transport_frames(model, p[None, :], q[None, :], columns[None])[0]
    return moved[:, 0] if single else moved


def frame_angles(model: AmbientModel, heads: np.ndarray, transported: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """-arg det of U_ab = G(E'_b, e_a) + i G(E'_b, I e_a) per edge."""
    g = model.metric(heads)
    turned = np.einsum("ij,mjb->mib", model.J, reference)
    real = np.einsum("mia,mij,mjb->mab", reference, g, transported)
    imag = np.einsum("mia,mij,mjb->mab", turned, g, transported)
    return -np.angle(np.linalg.det(real + 1j * imag))


def relative_connection(mesh: LagrangianMesh, frames: Optional[np.ndarray] = None, strict: bool = True) -> RelativeConnection:
    """Edge angles of the determinant Levi-Civita connection against the tangent-frame trivialization."""
    if frames is None:
        frames = orthonormal_tangent_frames(mesh).frames
    model = mesh.model
    tails = mesh.vertices[mesh.edge_tail]
    heads = tails + mesh.edge_vectors
    transported = transport_frames(model, tails, heads, frames[mesh.edge_tail])
    eta = frame_angles(model, heads, transported, frames[mesh.edge_head])
    unresolved = np.abs(eta) >= config.RESOLUTION_GUARD * np.pi
    if unresolved.any():
        worst = int(np.argmax(np.abs(eta)))
        if strict:
            raise UnresolvedMeshError(f"edge {worst} turns by {eta[worst]:.3f} rad", worst_edge=worst)
        LOGGER.warning(f"{int(unresolved.sum())} edges exceed the resolution guard on {mesh.mesh_id}")
    return RelativeConnection(mesh, DiscreteForm(mesh, 1, eta), unresolved, frames)


def connection_curvature(conn: RelativeConnection) -> DiscreteForm:
    """Face sums of eta; approximates -rho restricted to the surface."""
    if conn.mesh.topology == LOOP:
        raise DegreeError("curvature needs 2-cells; loops have none")
    return d(conn.eta)


def _curvature_norm(conn: RelativeConnection) -> float:
    if conn.mesh.topology == LOOP:
        return 0.0
    return float(np.abs(connection_curvature(conn).values / face_areas(conn.mesh)).max())


def _spanning_tree_potential(mesh: LagrangianMesh, exact: np.ndarray) -> np.ndarray:
    """Integrate an exact 1-form along a BFS spanning tree; mean-zero for the vertex volumes."""
    nv = mesh.n_vertices
    graph = sparse.csr_matrix((np.ones(mesh.n_edges), (mesh.edge_tail, mesh.edge_head)), shape=(nv, nv))
    edge_of = {(int(t), int(h)): e for e, (t, h) in enumerate(zip(mesh.edge_tail, mesh.edge_head))}
    order, predecessors = breadth_first_order(graph, 0, directed=False, return_predecessors=True)
    potential = np.zeros(nv)
    for vertex in order[1:]:
        parent = int(predecessors[vertex])
        forward = edge_of.get((parent, int(vertex)))
        if forward is not None:
            potential[vertex] = potential[parent] + exact[forward]
        else:
            potential[vertex] = potential[parent] - exact[edge_of[(int(vertex), parent)]]
    weights = vertex_volumes(mesh)
    return potential - np.sum(weights * potential) / weights.sum()


def decompose_connection(conn: RelativeConnection, power: int = 1, strict_boundary: bool = True) -> MaslovReport:
    """Split k*eta into coexact (Delta1), fractional harmonic (Delta2), integer winding and exact (d phi) parts."""
    mesh = conn.mesh
    form = power * conn.eta
    split = hodge_decompose(mesh, form)
    total_periods = periods(form)
    harmonic_periods = periods(split.harmonic)
    turns = harmonic_periods / (2.0 * np.pi)
    integers = np.round(turns)
    fractional = turns - integers
    bounded = bool(np.all(np.abs(fractional) < 0.5 - config.HALF_INTEGER_MARGIN))
    if not bounded and strict_boundary:
        raise HalfIntegerBoundaryError(
            f"fractional periods {np.round(fractional, 6).tolist()} within the margin of 1/2",
            fractional_periods=fractional.tolist(),
        )
    basis = harmonic_basis(mesh)
    delta2 = DiscreteForm(mesh, 1, sum(f * h.values for f, h in zip(fractional, basis)))
    winding = DiscreteForm(mesh, 1, sum(m * h.values for m, h in zip(integers, basis)))
    delta1 = split.coexact
    raw = (total_periods - periods(delta1) - periods(delta2)) / (2.0 * np.pi)
    if np.abs(raw - integers).max(initial=0.0) >= 0.1:
        raise NumericalError(f"winding periods {raw.tolist()} are not near integers")
    maslov, phase = None, None
    if bounded:
        remainder = form - delta1 - delta2 - winding
        phase = DiscreteForm(mesh, 0, _spanning_tree_potential(mesh, remainder.values))
        maslov = [int(m) for m in integers]
    curvature_norm = _curvature_norm(conn)
    coexact_norm = float(np.sqrt(max(inner_product(delta1, delta1), 0.0)))
    is_flat = curvature_norm < config.FLAT_TOL
    trivial = bool(np.all(np.abs(fractional) < config.PERIOD_TOL))
    special = bounded and trivial and is_flat and all(m == 0 for m in maslov) and float(np.ptp(phase.values)) < config.PHASE_TOL
    LOGGER.info(f"Maslov integers {maslov} (k={power}), fractional periods {np.round(fractional, 9).tolist()}")
    return MaslovReport(
        mesh=mesh,
        power=power,
        maslov_integers=maslov,
        periods=total_periods,
        harmonic_periods=harmonic_periods,
        fractional_periods=fractional,
        curvature_norm=curvature_norm,
        coexact_norm=coexact_norm,
        delta1=delta1,
        delta2=delta2,
        winding=winding,
        phase=phase,
        is_flat=is_flat,
        trivial_periods=trivial,
        bounded_periods=bounded,
        is_bohr_sommerfeld=is_flat and trivial,
        is_special=special,
    )


def is_bohr_sommerfeld(conn: RelativeConnection, level: int = 1, tol: Optional[float] = None) -> BohrSommerfeldCheck:
    """True iff every period of level*eta lies within tol of 2*pi*Z (flat connections only)."""
    tol = config.PERIOD_TOL if tol is None else tol
    curvature_norm = _curvature_norm(conn)
    if curvature_norm >= config.FLAT_TOL:
        raise NotApplicableError(f"connection is not flat (curvature {curvature_norm:.3e})", curvature_norm=curvature_norm)
    turns = periods(level * conn.eta) / (2.0 * np.pi)
    defects = 2.0 * np.pi * np.abs(turns - np.round(turns))
    return BohrSommerfeldCheck(level, bool(np.all(defects < tol)), defects, curvature_norm)


def _signed_crossings(values: np.ndarray):
    """Signed crossings of the real axis along a closed sequence of complex numbers."""
    following = np.roll(values, -1)
    im_a, im_b = values.imag, following.imag
    changes = np.nonzero(np.sign(im_a) != np.sign(im_b))[0]
    total = 0
    for k in changes:
        t = im_a[k] / (im_a[k] - im_b[k])
        real = values[k].real + t * (following[k].real - values[k].real)
        upward = im_b[k] > im_a[k]
        total += 1 if upward == (real > 0) else -1
    return total, changes


def imtheta_zero_set(mesh: LagrangianMesh, power: int = 1) -> ZeroSetCount:
    """Signed count of Im theta(tau) = 0 crossings per basis cycle, halved: the winding of theta(tau)."""
    model = mesh.model
    if not model.has_holomorphic_volume:
        raise UnsupportedModelError(f"{model.kind} has no holomorphic volume form")
    frames = orthonormal_tangent_frames(mesh).frames
    zeta = (model.holomorphic_volume(mesh.vertices) * np.linalg.det(complex_frame(frames))) ** power
    for attempt in range(config.ZERO_CROSSING_RETRIES + 1):
        rotated = zeta * np.exp(1j * 0.37 * attempt)
        if np.all(np.abs(rotated.imag) > config.ZERO_CROSSING_TOL * np.abs(rotated)):
            break
        LOGGER.warning(f"Im theta vanishes at a vertex; rotating the phase (attempt {attempt + 1})")
    else:
        raise NumericalError("Im theta keeps vanishing at a vertex")
    counts, crossings = [], []
    for cycle in mesh.cycles:
        total, changes = _signed_crossings(rotated[cycle.vertices])
        if total % 2:
            raise NumericalError(f"odd crossing count {total} along a closed cycle")
        counts.append(total // 2)
        crossings.append(changes)
    return ZeroSetCount(counts, crossings, attempt)


def half_weight(report: MaslovReport, mesh: LagrangianMesh, r: float) -> HalfWeight:
    """Half-weight density (phi + c) dmu with c fixed by total weight r."""
    if not report.trivial_maslov_class or report.phase is None:
        raise NotApplicableError(f"Maslov class {report.maslov_integers} is not trivial")
    if r <= 0.0:
        raise NotApplicableError(f"total weight must be positive, got {r}")
    volume, dmu = induced_volume(mesh)
    phi = report.phase.values
    if mesh.topology == LOOP:
        cell_phase = 0.5 * (phi + np.roll(phi, -1))
    else:
        n1, n2 = mesh.shape
        grid = phi.reshape(n1, n2)
        cell_phase = 0.25 * (grid + np.roll(grid, -1, 0) + np.roll(grid, -1, 1) + np.roll(grid, (-1, -1), (0, 1)))
        cell_phase = cell_phase.reshape(-1)
    mean = float(np.sum(cell_phase * dmu.values) / volume)
    weight = cell_phase - mean + r / volume
    sign_warning = bool(np.any(weight < 0.0))
    if sign_warning:
        LOGGER.warning(f"Half-weight density changes sign (min {weight.min():.3e}); increase r")
    density = DiscreteForm(mesh, mesh.top_degree, weight * dmu.values)
    return HalfWeight(density, float(density.values.sum()), r / volume - mean, sign_warning)
