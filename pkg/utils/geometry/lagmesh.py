"""Discretized oriented Lagrangian submanifolds: loops (n = 1) and periodic torus grids (n = 2).

Vertices are stored as chart points. On tori a mesh may be a lift of a closed submanifold,
so crossing a seam adds a lattice translation (`shifts`); `position` returns unwrapped
positions for arbitrary integer grid indices.
"""

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from logging import getLogger
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

import config
from utils.exceptions import DegreeError, DimensionError, MeshError, ModelConfigurationError, NotLagrangianError
from utils.geometry.ambient import AmbientModel, ConformalSphere, PotentialKahler, antipodal_remap, load_model
from utils.models.mesh_model import FormDocument, MeshDocument

LOGGER = getLogger(__name__)

LOOP = "loop"
TORUS = "torus_grid"

TANGENT_STEP = 1e-5  # parameter step for parametrization tangents


@dataclass(frozen=True)
class Cycle:
    """Closed edge path: oriented edges with signs, and the vertices visited in order."""
    edges: np.ndarray
    signs: np.ndarray
    vertices: np.ndarray


@dataclass(frozen=True, eq=False)
class LagrangianMesh:
    model: AmbientModel
    topology: str
    shape: Tuple[int, ...]
    vertices: np.ndarray
    shifts: np.ndarray
    parametrization: Optional[Callable] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def n_vertices(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_edges(self) -> int:
        return self.n_vertices * self.dim

    @property
    def n_faces(self) -> int:
        return self.n_vertices if self.topology == TORUS else 0

    @property
    def top_degree(self) -> int:
        return self.dim

    def cell_count(self, degree: int) -> int:
        counts = {0: self.n_vertices, 1: self.n_edges}
        if self.topology == TORUS:
            counts[2] = self.n_faces
        if degree not in counts:
            raise DegreeError(f"no {degree}-cells on a {self.topology} mesh")
        return counts[degree]

    def position(self, i: np.ndarray, j: Optional[np.ndarray] = None) -> np.ndarray:
        """Unwrapped chart positions for integer grid indices (any integers)."""
        i = np.asarray(i)
        if self.topology == LOOP:
            n = self.shape[0]
            return self.vertices[i % n] + (i // n)[..., None] * self.shifts[0]
        n1, n2 = self.shape
        j = np.asarray(j)
        base = self.vertices[(i % n1) * n2 + (j % n2)]
        return base + (i // n1)[..., None] * self.shifts[0] + (j // n2)[..., None] * self.shifts[1]

    @cached_property
    def grid_indices(self) -> Tuple[np.ndarray, ...]:
        if self.topology == LOOP:
            return (np.arange(self.shape[0]),)
        n1, n2 = self.shape
        return tuple(np.divmod(np.arange(n1 * n2), n2))

    @cached_property
    def edge_tail(self) -> np.ndarray:
        v = np.arange(self.n_vertices)
        return v if self.topology == LOOP else np.concatenate([v, v])

    @cached_property
    def edge_head(self) -> np.ndarray:
        if self.topology == LOOP:
            return (np.arange(self.shape[0]) + 1) % self.shape[0]
        n1, n2 = self.shape
        i, j = self.grid_indices
        return np.concatenate([((i + 1) % n1) * n2 + j, i * n2 + (j + 1) % n2])

    @cached_property
    def edge_vectors(self) -> np.ndarray:
        if self.topology == LOOP:
            k = np.arange(self.shape[0])
            return self.position(k + 1) - self.position(k)
        i, j = self.grid_indices
        here = self.position(i, j)
        along_s = self.position(i + 1, j) - here
        along_t = self.position(i, j + 1) - here
        return np.concatenate([along_s, along_t])

    @cached_property
    def edge_midpoints(self) -> np.ndarray:
        return self.vertices[self.edge_tail] + 0.5 * self.edge_vectors

    @cached_property
    def d0(self) -> sparse.csr_matrix:
        rows = np.arange(self.n_edges)
        data = np.concatenate([-np.ones(self.n_edges), np.ones(self.n_edges)])
        return sparse.csr_matrix(
            (data, (np.concatenate([rows, rows]), np.concatenate([self.edge_tail, self.edge_head]))),
            shape=(self.n_edges, self.n_vertices),
        )

    @cached_property
    def d1(self) -> sparse.csr_matrix:
        if self.topology != TORUS:
            raise DegreeError("a loop has no 2-cells")
        n1, n2 = self.shape
        i, j = self.grid_indices
        nv = n1 * n2
        faces = np.arange(nv)
        # boundary of face (i, j): s(i, j) + t(i+1, j) - s(i, j+1) - t(i, j)
        cols = [
            i * n2 + j,
            nv + ((i + 1) % n1) * n2 + j,
            i * n2 + (j + 1) % n2,
            nv + i * n2 + j,
        ]
        signs = [1.0, 1.0, -1.0, -1.0]
        return sparse.csr_matrix(
            (np.concatenate([np.full(nv, s) for s in signs]), (np.tile(faces, 4), np.concatenate(cols))),
            shape=(nv, self.n_edges),
        )

    @cached_property
    def cycles(self) -> List[Cycle]:
        if self.topology == LOOP:
            k = np.arange(self.shape[0])
            return [Cycle(k, np.ones(len(k)), k)]
        n1, n2 = self.shape
        along_s = np.arange(n1) * n2
        along_t = np.arange(n2)
        return [
            Cycle(along_s, np.ones(n1), along_s),
            Cycle(n1 * n2 + along_t, np.ones(n2), along_t),
        ]

    @cached_property
    def mesh_id(self) -> str:
        digest = hashlib.sha1()
        digest.update(self.topology.encode())
        digest.update(np.ascontiguousarray(np.round(self.vertices, 12)).tobytes())
        return digest.hexdigest()[:16]

    def with_vertices(self, vertices: np.ndarray) -> "LagrangianMesh":
        return LagrangianMesh(self.model, self.topology, self.shape, np.asarray(vertices, float), self.shifts)

    def reversed(self) -> "LagrangianMesh":
        """Same submanifold with the opposite orientation."""
        if self.topology == LOOP:
            param = None
            if self.parametrization is not None:
                original = self.parametrization
                param = lambda t: original((-np.asarray(t) - 1.0 / self.shape[0]) % 1.0 + 0.0)
            return LagrangianMesh(self.model, LOOP, self.shape, self.vertices[::-1].copy(), -self.shifts, param)
        n1, n2 = self.shape
        swapped = self.vertices.reshape(n1, n2, -1).transpose(1, 0, 2).reshape(n1 * n2, -1)
        param = None
        if self.parametrization is not None:
            original = self.parametrization
            param = lambda s, t: original(t, s)
        return LagrangianMesh(self.model, TORUS, (n2, n1), swapped.copy(), self.shifts[::-1].copy(), param)


@dataclass(frozen=True, eq=False)
class DiscreteForm:
    """Real cochain on the vertices (0), edges (1) or faces (2) of a mesh."""
    mesh: LagrangianMesh
    degree: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.mesh.cell_count(self.degree),):
            raise DegreeError(f"{self.degree}-form needs {self.mesh.cell_count(self.degree)} values, got {values.shape}")
        object.__setattr__(self, "values", values)

    def _check(self, other: "DiscreteForm"):
        if other.mesh is not self.mesh or other.degree != self.degree:
            raise DegreeError("forms live on different meshes or degrees")

    def __add__(self, other: "DiscreteForm") -> "DiscreteForm":
        self._check(other)
        return DiscreteForm(self.mesh, self.degree, self.values + other.values)

    def __sub__(self, other: "DiscreteForm") -> "DiscreteForm":
        self._check(other)
        return DiscreteForm(self.mesh, self.degree, self.values - other.values)

    def __mul__(self, scalar: float) -> "DiscreteForm":
        return DiscreteForm(self.mesh, self.degree, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "DiscreteForm":
        return DiscreteForm(self.mesh, self.degree, -self.values)

    def max_abs(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))

    def to_document(self) -> FormDocument:
        return FormDocument(degree=self.degree, values=self.values.tolist(), mesh_id=self.mesh.mesh_id)


@dataclass(frozen=True)
class TangentFrames:
    frames: np.ndarray  # (V, 2n, n), columns G-orthonormal
    conditioning: float  # smallest eigenvalue ratio of the induced metric
    ill_conditioned: bool


def _lattice_shift(model: AmbientModel, gap: np.ndarray) -> np.ndarray:
    """Validate the closing gap of a parametrization: zero, or a lattice vector on tori."""
    scale = max(1.0, float(np.abs(gap).max()))
    if np.abs(gap).max() <= 1e-9 * scale:
        return np.zeros_like(gap)
    lattice = model.lattice
    if lattice is None:
        raise MeshError("parametrization is not closed")
    coefficients = gap @ np.linalg.inv(lattice)
    rounded = np.round(coefficients)
    if np.abs(coefficients - rounded).max() > 1e-9:
        raise MeshError("parametrization does not close up to a lattice translation")
    return rounded @ lattice


def _check_vertices(vertices: np.ndarray, edge_vectors: np.ndarray):
    diameter = float(np.ptp(vertices, axis=0).max()) if len(vertices) else 0.0
    if diameter == 0.0 or np.linalg.norm(edge_vectors, axis=-1).min() == 0.0:
        raise MeshError("degenerate vertices")
    pairs = cKDTree(vertices).query_pairs(config.REPEATED_VERTEX_RATIO * diameter)
    if pairs:
        raise MeshError(f"{len(pairs)} repeated vertices", pairs=sorted(pairs)[:5])


def _sphere_chart(model: AmbientModel, vertices: np.ndarray):
    """Move a loop into the antipodal sphere chart if it wanders near the projection pole."""
    if not isinstance(model, ConformalSphere):
        return model, vertices, None
    radius = np.linalg.norm(vertices, axis=-1)
    if radius.max() <= config.SPHERE_CHART_RADIUS:
        return model, vertices, None
    if radius.min() < 1.0 / config.SPHERE_CHART_RADIUS:
        raise MeshError("submanifold passes near both poles; no single chart covers it")
    other = "antipodal" if model.chart == "stereographic" else "stereographic"
    LOGGER.info(f"Remapping mesh to the {other} chart (max |z| = {radius.max():.3g})")
    return model.with_chart(other), antipodal_remap(vertices), antipodal_remap


def recharted(mesh: LagrangianMesh) -> LagrangianMesh:
    """The same mesh in the other sphere chart when its vertices approach the projection pole."""
    model, vertices, remap = _sphere_chart(mesh.model, mesh.vertices)
    if remap is None:
        return mesh
    return LagrangianMesh(model, mesh.topology, mesh.shape, vertices, mesh.shifts)


def build_loop(model: AmbientModel, parametrization: Callable, n: int) -> LagrangianMesh:
    """Loop mesh from a closed curve t in [0, 1) -> chart point."""
    if model.dim_complex != 1:
        raise DimensionError(f"loops are Lagrangian only in complex dimension 1, model has n={model.dim_complex}")
    if n < config.MIN_LOOP_VERTICES:
        raise MeshError(f"need at least {config.MIN_LOOP_VERTICES} vertices, got {n}")
    t = np.arange(n) / n
    vertices = np.asarray(parametrization(t), dtype=float).reshape(n, model.dim_real)
    model, vertices, remap = _sphere_chart(model, vertices)
    param = parametrization if remap is None else (lambda s: remap(np.asarray(parametrization(s))))
    ends = np.asarray(param(np.array([0.0, 1.0])), dtype=float).reshape(2, model.dim_real)
    shift = _lattice_shift(model, ends[1] - ends[0])
    model.validate(vertices)
    mesh = LagrangianMesh(model, LOOP, (n,), vertices, shift[None, :], param)
    _check_vertices(vertices, mesh.edge_vectors)
    LOGGER.info(f"Built loop mesh with {n} vertices on {model.kind}")
    return mesh


def build_torus_grid(
    model: AmbientModel, parametrization: Callable, n1: int, n2: int, tol: Optional[float] = None
) -> LagrangianMesh:
    """Periodic quad mesh from a doubly periodic map (s, t) in [0, 1)^2 -> chart point."""
    if model.dim_complex != 2:
        raise DimensionError(f"torus grids are Lagrangian only in complex dimension 2, model has n={model.dim_complex}")
    if min(n1, n2) < config.MIN_GRID_VERTICES:
        raise MeshError(f"need at least {config.MIN_GRID_VERTICES} vertices per axis, got {n1}x{n2}")
    i, j = np.divmod(np.arange(n1 * n2), n2)
    vertices = np.asarray(parametrization(i / n1, j / n2), dtype=float).reshape(n1 * n2, model.dim_real)
    model.validate(vertices)
    origin = np.asarray(parametrization(np.zeros(3), np.zeros(3)), dtype=float)[0]
    corners = np.asarray(parametrization(np.array([1.0, 0.0]), np.array([0.0, 1.0])), dtype=float)
    shifts = np.stack([_lattice_shift(model, corners[0] - origin), _lattice_shift(model, corners[1] - origin)])
    mesh = LagrangianMesh(model, TORUS, (n1, n2), vertices, shifts, parametrization)
    _check_vertices(vertices, mesh.edge_vectors)
    _check_induced_metric(mesh)
    residual = lagrangian_residual(mesh)
    limit = tol if tol is not None else (config.LAGRANGIAN_TOL_CURVED if model.curved else config.LAGRANGIAN_TOL_FLAT)
    worst = int(np.argmax(residual))
    if residual[worst] > limit:
        raise NotLagrangianError(
            f"worst cell {np.unravel_index(worst, (n1, n2))} has residual {residual[worst]:.3e} > {limit:.1e}",
            worst_cell=worst,
            residual=float(residual[worst]),
        )
    LOGGER.info(f"Built {n1}x{n2} torus grid on {model.kind}, Lagrangian residual {residual.max():.2e}")
    return mesh


def discrete_tangents(mesh: LagrangianMesh) -> np.ndarray:
    """Central-difference tangents per vertex and grid axis, shape (V, dim, 2n)."""
    if mesh.topology == LOOP:
        k = np.arange(mesh.shape[0])
        return (0.5 * (mesh.position(k + 1) - mesh.position(k - 1)))[:, None, :]
    i, j = mesh.grid_indices
    along_s = 0.5 * (mesh.position(i + 1, j) - mesh.position(i - 1, j))
    along_t = 0.5 * (mesh.position(i, j + 1) - mesh.position(i, j - 1))
    return np.stack([along_s, along_t], axis=1)


def second_differences(mesh: LagrangianMesh) -> np.ndarray:
    """Second differences per vertex, shape (V, dim, dim, 2n)."""
    if mesh.topology == LOOP:
        k = np.arange(mesh.shape[0])
        acc = mesh.position(k + 1) - 2.0 * mesh.vertices + mesh.position(k - 1)
        return acc[:, None, None, :]
    i, j = mesh.grid_indices
    here = mesh.vertices
    ss = mesh.position(i + 1, j) - 2.0 * here + mesh.position(i - 1, j)
    tt = mesh.position(i, j + 1) - 2.0 * here + mesh.position(i, j - 1)
    st = 0.25 * (
        mesh.position(i + 1, j + 1) - mesh.position(i + 1, j - 1) - mesh.position(i - 1, j + 1) + mesh.position(i - 1, j - 1)
    )
    return np.stack([np.stack([ss, st], axis=1), np.stack([st, tt], axis=1)], axis=1)


def parametrization_tangents(mesh: LagrangianMesh) -> np.ndarray:
    """Tangents of the analytic parametrization, scaled to one grid step, shape (V, dim, 2n)."""
    h = TANGENT_STEP
    if mesh.topology == LOOP:
        n = mesh.shape[0]
        t = np.arange(n) / n
        diff = np.asarray(mesh.parametrization(t + h)) - np.asarray(mesh.parametrization(t - h))
        return (diff / (2 * h * n))[:, None, :]
    n1, n2 = mesh.shape
    i, j = mesh.grid_indices
    s, t = i / n1, j / n2
    param = mesh.parametrization
    along_s = (np.asarray(param(s + h, t)) - np.asarray(param(s - h, t))) / (2 * h * n1)
    along_t = (np.asarray(param(s, t + h)) - np.asarray(param(s, t - h))) / (2 * h * n2)
    return np.stack([along_s, along_t], axis=1)


def induced_gram(mesh: LagrangianMesh, tangents: Optional[np.ndarray] = None) -> np.ndarray:
    tangents = discrete_tangents(mesh) if tangents is None else tangents
    g = mesh.model.metric(mesh.vertices)
    return np.einsum("vai,vij,vbj->vab", tangents, g, tangents)


def _check_induced_metric(mesh: LagrangianMesh):
    eigen = np.linalg.eigvalsh(induced_gram(mesh))
    if eigen.min() <= 0.0:
        raise MeshError(f"induced metric degenerate at vertex {int(np.argmin(eigen.min(axis=-1)))}")


def lagrangian_residual(mesh: LagrangianMesh, discrete: bool = False) -> np.ndarray:
    """Per-vertex |omega(t_s, t_t)| / (|t_s| |t_t|); identically zero on loops."""
    if mesh.topology == LOOP:
        return np.zeros(mesh.n_vertices)
    use_param = mesh.parametrization is not None and not discrete
    tangents = parametrization_tangents(mesh) if use_param else discrete_tangents(mesh)
    omega = mesh.model.symplectic(mesh.vertices)
    pairing = np.einsum("vi,vij,vj->v", tangents[:, 0], omega, tangents[:, 1])
    gram = induced_gram(mesh, tangents)
    return np.abs(pairing) / np.sqrt(gram[:, 0, 0] * gram[:, 1, 1])


def edge_lengths(mesh: LagrangianMesh) -> np.ndarray:
    g = mesh.model.metric(mesh.edge_midpoints)
    return np.sqrt(np.einsum("ei,eij,ej->e", mesh.edge_vectors, g, mesh.edge_vectors))


def face_geometry(mesh: LagrangianMesh):
    """Face centres and averaged side vectors (a along s, b along t)."""
    if mesh.topology != TORUS:
        raise DegreeError("a loop has no 2-cells")
    i, j = mesh.grid_indices
    p00 = mesh.position(i, j)
    p10 = mesh.position(i + 1, j)
    p11 = mesh.position(i + 1, j + 1)
    p01 = mesh.position(i, j + 1)
    centres = 0.25 * (p00 + p10 + p11 + p01)
    a = 0.5 * (p10 - p00 + p11 - p01)
    b = 0.5 * (p01 - p00 + p11 - p10)
    return centres, a, b


def face_areas(mesh: LagrangianMesh) -> np.ndarray:
    centres, a, b = face_geometry(mesh)
    g = mesh.model.metric(centres)
    gaa = np.einsum("fi,fij,fj->f", a, g, a)
    gbb = np.einsum("fi,fij,fj->f", b, g, b)
    gab = np.einsum("fi,fij,fj->f", a, g, b)
    return np.sqrt(gaa * gbb - gab**2)


def vertex_volumes(mesh: LagrangianMesh) -> np.ndarray:
    """Dual-cell volume per vertex."""
    if mesh.topology == LOOP:
        lengths = edge_lengths(mesh)
        return 0.5 * (lengths + np.roll(lengths, 1))
    n1, n2 = mesh.shape
    areas = face_areas(mesh).reshape(n1, n2)
    dual = areas + np.roll(areas, 1, axis=0) + np.roll(areas, 1, axis=1) + np.roll(areas, (1, 1), axis=(0, 1))
    return 0.25 * dual.reshape(-1)


def induced_volume(mesh: LagrangianMesh) -> Tuple[float, DiscreteForm]:
    """Total Riemannian volume and the per-cell density as a top-degree form."""
    cells = edge_lengths(mesh) if mesh.topology == LOOP else face_areas(mesh)
    return float(np.sum(cells)), DiscreteForm(mesh, mesh.top_degree, cells)


def orthonormal_tangent_frames(mesh: LagrangianMesh) -> TangentFrames:
    """Oriented G-orthonormal frames of TS by Gram-Schmidt on the grid-axis tangents."""
    tangents = discrete_tangents(mesh)
    g = mesh.model.metric(mesh.vertices)

    def inner(u, v):
        return np.einsum("vi,vij,vj->v", u, g, v)

    columns = []
    for a in range(mesh.dim):
        vec = tangents[:, a].copy()
        for previous in columns:
            vec = vec - inner(vec, previous)[:, None] * previous
        columns.append(vec / np.sqrt(inner(vec, vec))[:, None])
    eigen = np.linalg.eigvalsh(induced_gram(mesh, tangents))
    conditioning = float((eigen[:, 0] / eigen[:, -1]).min())
    ill = conditioning < config.CONDITIONING_FLOOR
    if ill:
        LOGGER.warning(f"Induced metric nearly degenerate (eigenvalue ratio {conditioning:.2e})")
    return TangentFrames(np.stack(columns, axis=-1), conditioning, ill)


def complex_frame(frames: np.ndarray) -> np.ndarray:
    """Frame columns as complex n x n matrices in the standard chart."""
    n = frames.shape[-1]
    return frames[:, :n, :] + 1j * frames[:, n:, :]


def legendre_graph_parametrization(
    model: PotentialKahler, momentum: Callable[[np.ndarray], np.ndarray], offset: np.ndarray
) -> Callable:
    """Exact Lagrangian torus {grad Phi(y) = offset + momentum(x)} of a fibre-only potential.

    With h depending on y only, omega = sum dx_k ^ d(d_k Phi)(y) for Phi = |y|^2/2 + eps h/4,
    so the graph over x of any y solving grad Phi(y) = c + grad u(x) is Lagrangian.
    """
    n = model.dim_complex
    if model.lattice is None:
        raise ModelConfigurationError("graph tori need a periodic base")
    if len(model.modes) and np.abs(model.wave_vectors[:, :n]).max() > 0.0:
        raise ModelConfigurationError("graph tori need a perturbation depending on the fibre coordinates only")
    period = np.diag(model.lattice)[:n]
    offset = np.asarray(offset, dtype=float)

    def parametrization(s, t):
        x = np.stack([np.asarray(s, float) * period[0], np.asarray(t, float) * period[1]], axis=-1)
        target = offset + momentum(x)
        y = target.copy()
        for _ in range(50):
            point = np.concatenate([x, y], axis=-1)
            residual = y + 0.25 * model.epsilon * model.potential_gradient(point)[:, n:] - target
            if np.abs(residual).max() < 1e-14:
                break
            jac = np.eye(n) + 0.25 * model.epsilon * model.potential_hessian(point)[:, n:, n:]
            y = y - np.linalg.solve(jac, residual[..., None])[..., 0]
        return np.concatenate([x, y], axis=-1)

    return parametrization


def save_mesh(mesh: LagrangianMesh, path: str):
    document = MeshDocument(
        topology=mesh.topology,
        shape=list(mesh.shape),
        vertices=mesh.vertices.tolist(),
        shifts=mesh.shifts.tolist(),
        model=mesh.model.to_document(),
        mesh_id=mesh.mesh_id,
    )
    with open(path, "w") as handle:
        handle.write(document.model_dump_json(indent=2))


def load_mesh(path: str) -> LagrangianMesh:
    with open(path) as handle:
        document = MeshDocument(**json.load(handle))
    model = load_model(document.model)
    mesh = LagrangianMesh(
        model, document.topology, tuple(document.shape), np.asarray(document.vertices, float), np.asarray(document.shifts, float)
    )
    _check_vertices(mesh.vertices, mesh.edge_vectors)
    return mesh
