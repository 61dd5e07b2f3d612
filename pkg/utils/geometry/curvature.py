"""Second fundamental form, the mean curvature 1-form and the identities tying it to the
determinant connection.

Conventions: alpha_H(X) = omega(X, H) with H = tr II, so the mean curvature form of the
counter-clockwise unit circle has period 2*pi and matches the edge angles eta of
`transport.relative_connection` edge by edge. With these orientations d alpha_H = -rho|_S.
"""

from dataclasses import dataclass, field
from logging import getLogger
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

import config
from utils.exceptions import DegreeError, NotApplicableError, RefinementError
from utils.geometry.dec import HodgeSplit, codifferential, d, hodge_decompose, inner_product, periods
from utils.geometry.lagmesh import (
    LOOP,
    DiscreteForm,
    LagrangianMesh,
    discrete_tangents,
    edge_lengths,
    face_areas,
    face_geometry,
    second_differences,
)
from utils.geometry.transport import MaslovReport, RelativeConnection, decompose_connection, relative_connection
from utils.models.report_model import (
    ConvergenceDocument,
    ConvergenceRowDocument,
    CurvatureReportDocument,
)

LOGGER = getLogger(__name__)


@dataclass(frozen=True)
class SecondFundamentalForm:
    tensor: np.ndarray  # (V, dim, dim, 2n) normal-valued, grid-step units
    mean_curvature: np.ndarray  # (V, 2n) H = g^ab II_ab
    induced_inverse: np.ndarray  # (V, dim, dim)
    tangential_residual: float  # max tangential share of the covariant second derivative
    asymmetry: float

    def norms(self, metric: np.ndarray) -> np.ndarray:
        """|II| per vertex for the induced and ambient metrics."""
        g_inv = self.induced_inverse
        pairing = np.einsum("vabi,vij,vcdj->vabcd", self.tensor, metric, self.tensor)
        return np.sqrt(np.einsum("vac,vbd,vabcd->v", g_inv, g_inv, pairing))


@dataclass(frozen=True)
class RicciCheck:
    residual: float
    d_alpha: DiscreteForm
    ricci: DiscreteForm  # -rho|_S integrated per face


@dataclass(frozen=True)
class Minimality:
    l_norm: float
    h_norm: float
    l_minimal: bool
    h_minimal: bool


@dataclass(frozen=True)
class HodgeMatch:
    coexact_residual: float
    period_residual: np.ndarray
    alpha_harmonic_periods: np.ndarray
    delta2_periods: np.ndarray
    maslov_integers: List[int]
    consistent: bool


@dataclass(frozen=True)
class CurvatureReport:
    mesh: LagrangianMesh
    alpha: DiscreteForm
    connection: RelativeConnection
    transport_residual: float
    edge_residuals: np.ndarray
    ricci_residual: Optional[float]
    minimality: Minimality
    hodge_split: HodgeSplit

    @property
    def l_norm(self) -> float:
        return self.minimality.l_norm

    @property
    def h_norm(self) -> float:
        return self.minimality.h_norm

    def to_document(self) -> CurvatureReportDocument:
        split = self.hodge_split
        return CurvatureReportDocument(
            mesh_id=self.mesh.mesh_id,
            alpha_periods=periods(self.alpha).tolist(),
            eta_periods=periods(self.connection.eta).tolist(),
            transport_residual=self.transport_residual,
            ricci_residual=self.ricci_residual,
            l_minimal=self.minimality.l_minimal,
            h_minimal=self.minimality.h_minimal,
            harmonic_norm=float(np.sqrt(max(inner_product(split.harmonic, split.harmonic), 0.0))),
            coexact_norm=float(np.sqrt(max(inner_product(split.coexact, split.coexact), 0.0))),
            exact_norm=float(np.sqrt(max(inner_product(split.exact, split.exact), 0.0))),
        )


@dataclass
class ConvergenceTable:
    resolutions: List[int]
    residuals: Dict[str, List[float]] = field(default_factory=dict)

    @property
    def orders(self) -> Dict[str, List[float]]:
        result = {}
        for name, values in self.residuals.items():
            orders = []
            for k in range(len(values) - 1):
                ratio = self.resolutions[k + 1] / self.resolutions[k]
                if values[k] <= 0.0 or values[k + 1] <= 0.0:
                    orders.append(float("nan"))
                else:
                    orders.append(float(np.log(values[k] / values[k + 1]) / np.log(ratio)))
            result[name] = orders
        return result

    def to_document(self) -> ConvergenceDocument:
        rows = [
            ConvergenceRowDocument(resolution=n, residuals={name: v[k] for name, v in self.residuals.items()})
            for k, n in enumerate(self.resolutions)
        ]
        return ConvergenceDocument(rows=rows, orders=self.orders)


def second_fundamental_form(mesh: LagrangianMesh) -> SecondFundamentalForm:
    """Normal part of the covariant second derivative of the grid map, per vertex."""
    model = mesh.model
    tangents = discrete_tangents(mesh)
    second = second_differences(mesh)
    gamma = model.christoffels(mesh.vertices)
    covariant = second + np.einsum("vkij,vai,vbj->vabk", gamma, tangents, tangents)
    g = model.metric(mesh.vertices)
    induced = np.einsum("vai,vij,vbj->vab", tangents, g, tangents)
    induced_inverse = np.linalg.inv(induced)
    # tangential projection P_T u = T g^-1 T^T G u
    lowered = np.einsum("vci,vij,vabj->vabc", tangents, g, covariant)
    tangential = np.einsum("vcd,vabd,vci->vabi", induced_inverse, lowered, tangents)
    normal = covariant - tangential
    scale = np.linalg.norm(covariant, axis=-1).max()
    tangential_share = float(np.linalg.norm(tangential, axis=-1).max() / scale) if scale > 0 else 0.0
    asymmetry = float(np.abs(normal - np.swapaxes(normal, 1, 2)).max())
    mean = np.einsum("vab,vabi->vi", induced_inverse, normal)
    # per axis: |II(t_a, t_a)| / |t_a|, the turning of the grid line over one step
    diagonal = np.einsum("vaai->vai", normal)
    turning = np.sqrt(np.einsum("vai,vij,vaj->va", diagonal, g, diagonal)) / np.sqrt(np.einsum("vaa->va", induced))
    bending = float(turning.max())
    if bending > config.MAX_CURVATURE_STEP:
        raise RefinementError(f"curvature times edge length is {bending:.3f}")
    return SecondFundamentalForm(normal, mean, induced_inverse, tangential_share, asymmetry)


def mean_curvature_one_form(mesh: LagrangianMesh, sff: Optional[SecondFundamentalForm] = None) -> DiscreteForm:
    """Edge integrals of alpha_H(X) = omega(X, H), H averaged to the edge midpoint."""
    sff = second_fundamental_form(mesh) if sff is None else sff
    h_mid = 0.5 * (sff.mean_curvature[mesh.edge_tail] + sff.mean_curvature[mesh.edge_head])
    omega = mesh.model.symplectic(mesh.edge_midpoints)
    values = np.einsum("ei,eij,ej->e", mesh.edge_vectors, omega, h_mid)
    return DiscreteForm(mesh, 1, values)


def _align(difference: np.ndarray) -> np.ndarray:
    return difference - 2.0 * np.pi * np.round(difference / (2.0 * np.pi))


def edge_residuals(conn: RelativeConnection, alpha: DiscreteForm) -> np.ndarray:
    """Per-edge |eta - int_e alpha_H| / length after removing 2*pi jumps."""
    return np.abs(_align(conn.eta.values - alpha.values)) / edge_lengths(alpha.mesh)


def minimality_report(mesh: LagrangianMesh, alpha: Optional[DiscreteForm] = None) -> Minimality:
    """L-minimal: alpha_H = 0. H-minimal: d* alpha_H = 0."""
    alpha = mean_curvature_one_form(mesh) if alpha is None else alpha
    l_norm = float(np.sqrt(max(inner_product(alpha, alpha), 0.0)))
    co = codifferential(mesh, alpha)
    h_norm = float(np.sqrt(max(inner_product(co, co), 0.0)))
    l_minimal = l_norm < config.L_MINIMAL_TOL
    h_minimal = l_minimal or h_norm < config.H_MINIMAL_TOL
    return Minimality(l_norm, h_norm, l_minimal, h_minimal)


def verify_ricci_identity(mesh: LagrangianMesh, alpha: Optional[DiscreteForm] = None) -> RicciCheck:
    """Face densities of d alpha_H + rho|_S."""
    if mesh.topology == LOOP:
        raise DegreeError("the Ricci identity is a statement about 2-forms; loops have none")
    alpha = mean_curvature_one_form(mesh) if alpha is None else alpha
    d_alpha = d(alpha)
    centres, a, b = face_geometry(mesh)
    rho = mesh.model.ricci_form(centres)
    pulled = -np.einsum("fi,fij,fj->f", a, rho, b)
    density = np.abs(d_alpha.values - pulled) / face_areas(mesh)
    LOGGER.info(f"Ricci identity residual density {density.max():.3e} on {mesh.mesh_id}")
    return RicciCheck(float(density.max()), d_alpha, DiscreteForm(mesh, 2, pulled))


def verify_transport_curvature(mesh: LagrangianMesh, conn: Optional[RelativeConnection] = None) -> CurvatureReport:
    """Compare the transport angles with the mean curvature edge integrals."""
    conn = relative_connection(mesh) if conn is None else conn
    alpha = mean_curvature_one_form(mesh)
    residuals = edge_residuals(conn, alpha)
    ricci = None if mesh.topology == LOOP else verify_ricci_identity(mesh, alpha).residual
    report = CurvatureReport(
        mesh=mesh,
        alpha=alpha,
        connection=conn,
        transport_residual=float(residuals.max()),
        edge_residuals=residuals,
        ricci_residual=ricci,
        minimality=minimality_report(mesh, alpha),
        hodge_split=hodge_decompose(mesh, alpha),
    )
    LOGGER.info(f"Mean curvature vs transport residual {report.transport_residual:.3e} on {mesh.mesh_id}")
    return report


def hodge_match(mesh: LagrangianMesh, report: Optional[CurvatureReport] = None, maslov: Optional[MaslovReport] = None) -> HodgeMatch:
    """Match the Hodge parts of alpha_H with the decomposition of the determinant connection."""
    report = verify_transport_curvature(mesh) if report is None else report
    maslov = decompose_connection(report.connection) if maslov is None else maslov
    if maslov.maslov_integers is None:
        raise NotApplicableError("Maslov integers are undefined at a half-integer period")
    split = report.hodge_split
    lengths = edge_lengths(mesh)
    coexact_residual = float((np.abs(split.coexact.values - maslov.delta1.values) / lengths).max())
    alpha_periods = periods(split.harmonic)
    delta2_periods = periods(maslov.delta2)
    expected = delta2_periods + 2.0 * np.pi * np.asarray(maslov.maslov_integers)
    period_residual = np.abs(alpha_periods - expected)
    step = lengths.max()
    cycle_lengths = np.array([lengths[c.edges].sum() for c in mesh.cycles])
    tolerance = config.TRANSPORT_RESIDUAL_CONSTANT * cycle_lengths * step**2 + 1e-9
    consistent = bool(np.all(period_residual <= tolerance))
    return HodgeMatch(coexact_residual, period_residual, alpha_periods, delta2_periods, maslov.maslov_integers, consistent)


def corollary_checks(minimality: Minimality, maslov: MaslovReport) -> Dict[str, bool]:
    """Minimality against flatness, periods and phase of the determinant connection."""
    phase_constant = maslov.phase_variation is not None and maslov.phase_variation < config.PHASE_TOL
    special_data = maslov.is_flat and maslov.trivial_periods and maslov.trivial_maslov_class and phase_constant
    checks = {"l_minimal_iff_special_data": minimality.l_minimal == special_data}
    if maslov.is_flat and maslov.trivial_maslov_class:
        checks["h_minimal_iff_l_minimal"] = minimality.h_minimal == minimality.l_minimal
    return checks


def convergence_study(
    builder: Callable[[int], LagrangianMesh],
    resolutions: Sequence[int],
    quantities: Dict[str, Callable[[LagrangianMesh], float]],
) -> ConvergenceTable:
    """Evaluate residual functionals on a sequence of meshes; orders come from consecutive pairs."""
    table = ConvergenceTable(list(resolutions), {name: [] for name in quantities})
    for n in resolutions:
        mesh = builder(n)
        for name, quantity in quantities.items():
            table.residuals[name].append(float(quantity(mesh)))
        LOGGER.info(f"Convergence sample N={n}: " + ", ".join(f"{k}={v[-1]:.3e}" for k, v in table.residuals.items()))
    return table
