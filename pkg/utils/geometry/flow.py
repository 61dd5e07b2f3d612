"""Deformations of Lagrangian meshes: Hamiltonian (isodrastic) flows, generic vector-field
drivers, Maslov invariance experiments and volume descent."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from logging import getLogger
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

import config
import state
from utils.exceptions import DomainError, MeshError, NotApplicableError, RefinementError, StepRejectedError
from utils.geometry.curvature import minimality_report, second_fundamental_form
from utils.geometry.dec import harmonic_basis
from utils.geometry.hamiltonians import AmbientFunction, hamiltonian_vector_field
from utils.geometry.lagmesh import (
    LOOP,
    LagrangianMesh,
    discrete_tangents,
    edge_lengths,
    induced_gram,
    induced_volume,
    lagrangian_residual,
    recharted,
    vertex_volumes,
)
from utils.geometry.transport import decompose_connection, relative_connection
from utils.models.report_model import FlowStepDocument, FlowTraceDocument, InvarianceDocument

LOGGER = getLogger(__name__)

MeshField = Callable[[LagrangianMesh], np.ndarray]


@dataclass
class FlowStep:
    step: int
    time: float
    volume: float
    lagrangian_residual: float
    mesh_id: str
    maslov_integers: Optional[List[int]] = None
    fractional_periods: Optional[List[float]] = None
    bohr_sommerfeld: Optional[bool] = None
    bohr_sommerfeld_defect: Optional[float] = None
    l_norm: Optional[float] = None
    h_norm: Optional[float] = None
    note: Optional[str] = None

    def to_document(self) -> FlowStepDocument:
        return FlowStepDocument(**self.__dict__)


@dataclass
class FlowTrace:
    label: str
    step_size: float
    description: str = ""
    steps: List[FlowStep] = field(default_factory=list)
    stop_reason: str = "running"
    fields: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)  # (f, phase) per vertex and step
    final_mesh: Optional[LagrangianMesh] = None

    @property
    def volumes(self) -> np.ndarray:
        return np.array([s.volume for s in self.steps])

    @property
    def recorded_integers(self) -> List[List[int]]:
        return [s.maslov_integers for s in self.steps if s.maslov_integers is not None]

    def to_document(self) -> FlowTraceDocument:
        return FlowTraceDocument(
            label=self.label,
            description=self.description,
            step_size=self.step_size,
            stop_reason=self.stop_reason,
            steps=[s.to_document() for s in self.steps],
        )


@dataclass
class InvarianceReport:
    traces: List[FlowTrace]
    initial_integers: Optional[List[int]]
    constant: bool
    jumps: List[dict]
    aborted: List[dict]
    fractional_drift: List[float]

    def to_document(self) -> InvarianceDocument:
        return InvarianceDocument(
            initial_integers=self.initial_integers,
            constant=self.constant,
            jumps=self.jumps,
            aborted=self.aborted,
            fractional_drift=self.fractional_drift,
            traces=[t.to_document() for t in self.traces],
        )


def _in_chart(f: AmbientFunction, mesh: LagrangianMesh) -> AmbientFunction:
    if hasattr(f, "for_chart") and getattr(f, "model", None) is not mesh.model:
        return f.for_chart(mesh.model)
    return f


def hamiltonian_field(f: AmbientFunction) -> MeshField:
    return lambda mesh: hamiltonian_vector_field(mesh.model, _in_chart(f, mesh), mesh.vertices)


def dilation_field(rate: float = 1.0, center: Optional[np.ndarray] = None) -> MeshField:
    """x -> rate * (x - center): radial motion in the chart, not Hamiltonian in general."""

    def evaluate(mesh: LagrangianMesh) -> np.ndarray:
        origin = np.zeros(mesh.model.dim_real) if center is None else np.asarray(center, dtype=float)
        return rate * (mesh.vertices - origin)

    return evaluate


def sharp(mesh: LagrangianMesh, values: np.ndarray) -> np.ndarray:
    """Vertex vectors dual (for the induced metric) to a 1-form given by edge integrals."""
    tangents = discrete_tangents(mesh)
    if mesh.topology == LOOP:
        per_step = 0.5 * (values + np.roll(values, 1))[:, None]
    else:
        n1, n2 = mesh.shape
        along_s = values[: n1 * n2].reshape(n1, n2)
        along_t = values[n1 * n2 :].reshape(n1, n2)
        per_step = np.stack(
            [0.5 * (along_s + np.roll(along_s, 1, 0)).reshape(-1), 0.5 * (along_t + np.roll(along_t, 1, 1)).reshape(-1)],
            axis=1,
        )
    raised = np.linalg.solve(induced_gram(mesh, tangents), per_step[..., None])[..., 0]
    return np.einsum("va,vai->vi", raised, tangents)


def flux_field(index: int) -> MeshField:
    """Lagrangian, non-Hamiltonian deformation -I beta^# for the index-th harmonic form beta."""

    def evaluate(mesh: LagrangianMesh) -> np.ndarray:
        beta = harmonic_basis(mesh)[index]
        return -sharp(mesh, beta.values) @ mesh.model.J.T

    return evaluate


def _advance(mesh: LagrangianMesh, vector_field: MeshField, step: float) -> LagrangianMesh:
    """One explicit midpoint step."""
    half = mesh.with_vertices(mesh.vertices + 0.5 * step * vector_field(mesh))
    moved = mesh.with_vertices(mesh.vertices + step * vector_field(half))
    moved.model.validate(moved.vertices)
    return recharted(moved)


def measure(mesh: LagrangianMesh, step: int, time: float, power: int = 1, track_curvature: bool = False) -> FlowStep:
    volume, _ = induced_volume(mesh)
    record = FlowStep(step, time, volume, float(lagrangian_residual(mesh, discrete=True).max()), mesh.mesh_id)
    conn = relative_connection(mesh, strict=False)
    report = decompose_connection(conn, power, strict_boundary=False)
    record.fractional_periods = report.fractional_periods.tolist()
    turns = report.periods / (2.0 * np.pi)
    record.bohr_sommerfeld_defect = float(2.0 * np.pi * np.abs(turns - np.round(turns)).max())
    record.bohr_sommerfeld = report.is_flat and record.bohr_sommerfeld_defect < config.PERIOD_TOL
    if not conn.resolved:
        record.note = "unresolved"
    elif not report.bounded_periods:
        record.note = "half_integer_boundary"
    else:
        record.maslov_integers = report.maslov_integers
    if track_curvature:
        minimality = minimality_report(mesh)
        record.l_norm, record.h_norm = minimality.l_norm, minimality.h_norm
    return record


def deform_along(
    mesh: LagrangianMesh,
    vector_field: MeshField,
    step: float,
    steps: int,
    label: str = "deformation",
    power: int = 1,
    track_curvature: bool = False,
    stop_at_boundary: bool = False,
    observe: Optional[Callable[[LagrangianMesh], np.ndarray]] = None,
) -> Tuple[LagrangianMesh, FlowTrace]:
    """Advance vertices along a (mesh-dependent) vector field, recording Maslov data per step."""
    trace = FlowTrace(label, step)
    first = measure(mesh, 0, 0.0, power, track_curvature)
    trace.steps.append(first)
    limit = config.LAGRANGIAN_BLOWUP * max(first.lagrangian_residual, config.LAGRANGIAN_TOL_FLAT)
    if observe is not None:
        trace.fields.append(observe(mesh))
    for k in range(1, steps + 1):
        mesh = _advance(mesh, vector_field, step)
        record = measure(mesh, k, k * step, power, track_curvature)
        if record.lagrangian_residual > limit:
            raise StepRejectedError(
                f"Lagrangian residual {record.lagrangian_residual:.3e} above {limit:.3e} at step {k}; try step {step / 2:g}",
                suggested_step=step / 2,
            )
        trace.steps.append(record)
        if observe is not None:
            trace.fields.append(observe(mesh))
        if stop_at_boundary and record.maslov_integers is None:
            trace.stop_reason = record.note or "half_integer_boundary"
            LOGGER.warning(f"{label}: stopped at step {k} ({trace.stop_reason}), fractional periods {record.fractional_periods}")
            break
    else:
        trace.stop_reason = "completed"
    trace.final_mesh = mesh
    LOGGER.info(f"{label}: {len(trace.steps) - 1} steps, {trace.stop_reason}")
    return mesh, trace


def hamiltonian_deform(
    mesh: LagrangianMesh,
    f: AmbientFunction,
    step: float,
    steps: int,
    label: Optional[str] = None,
    record_fields: bool = False,
    **options,
) -> Tuple[LagrangianMesh, FlowTrace]:
    """Flow along X_f for `steps` midpoint steps of size `step`."""
    observe = None
    if record_fields:
        def observe(current):
            phase = decompose_connection(relative_connection(current, strict=False), strict_boundary=False).phase
            values = np.full(current.n_vertices, np.nan) if phase is None else phase.values
            return _in_chart(f, current).value(current.vertices), values
    mesh, trace = deform_along(mesh, hamiltonian_field(f), step, steps, label or f.describe(), observe=observe, **options)
    trace.description = f.describe()
    return mesh, trace


def _family_field(member: Union[AmbientFunction, MeshField]) -> Tuple[MeshField, str]:
    if isinstance(member, AmbientFunction):
        return hamiltonian_field(member), member.describe()
    return member, getattr(member, "__name__", "vector field")


def invariance_experiment(
    mesh: LagrangianMesh,
    family: Sequence[Union[AmbientFunction, MeshField]],
    step: float,
    steps: int,
    power: int = 1,
    continue_through_boundary: bool = False,
    threads: Optional[int] = None,
) -> InvarianceReport:
    """Deform one mesh along every member of a family and compare the Maslov integers along the way."""
    workers = threads or state.run_settings["threads"]

    def run(indexed):
        index, member = indexed
        vector_field, description = _family_field(member)
        _, trace = deform_along(
            mesh, vector_field, step, steps, f"trace-{index}", power, stop_at_boundary=not continue_through_boundary
        )
        trace.description = description
        return trace

    with ThreadPoolExecutor(max_workers=max(1, workers), thread_name_prefix="flow_worker") as pool:
        traces = list(pool.map(run, enumerate(family)))

    initial = traces[0].steps[0].maslov_integers if traces else None
    constant = True
    jumps, aborted, drift = [], [], []
    for trace in traces:
        previous = None
        for record in trace.steps:
            if record.maslov_integers is None:
                continue
            if previous is not None and record.maslov_integers != previous.maslov_integers:
                jumps.append(
                    {"trace": trace.label, "step": record.step, "before": previous.maslov_integers, "after": record.maslov_integers}
                )
            previous = record
        if any(ints != initial for ints in trace.recorded_integers):
            constant = False
        if trace.stop_reason != "completed":
            last = trace.steps[-1]
            aborted.append({"trace": trace.label, "step": last.step, "reason": trace.stop_reason, "fractional_periods": last.fractional_periods})
        fractions = np.array([r.fractional_periods for r in trace.steps])
        drift.append(float(np.abs(fractions - fractions[0]).max()))
    if not constant:
        LOGGER.warning(f"Maslov integers changed: {jumps}")
    return InvarianceReport(traces, initial, constant, jumps, aborted, drift)


def _normal_part(mesh: LagrangianMesh, vectors: np.ndarray, tangents: np.ndarray, g: np.ndarray) -> np.ndarray:
    gram = induced_gram(mesh, tangents)
    lowered = np.einsum("vai,vij,vj->va", tangents, g, vectors)
    coefficients = np.linalg.solve(gram, lowered[..., None])[..., 0]
    return vectors - np.einsum("va,vai->vi", coefficients, tangents)


def _same_class(candidate: FlowStep, reference: FlowStep, isodrastic: bool) -> bool:
    """Same Maslov integers; with isodrastic moves also the same fractional periods."""
    if candidate.maslov_integers is None or candidate.maslov_integers != reference.maslov_integers:
        return False
    if not isodrastic:
        return True
    drift = np.asarray(candidate.fractional_periods) - np.asarray(reference.fractional_periods)
    return float(np.abs(drift - np.round(drift)).max()) < config.DESCENT_PERIOD_DRIFT


def volume_descent(
    mesh: LagrangianMesh,
    basis: Sequence[AmbientFunction],
    max_iterations: int = 200,
    tol: Optional[float] = None,
    isodrastic: bool = True,
    initial_step: float = 0.1,
    label: str = "descent",
) -> Tuple[LagrangianMesh, FlowTrace]:
    """Armijo line-search descent of the volume over a finite family of deformation fields.

    Hamiltonian fields of `basis` are always used; with isodrastic=False the harmonic flux fields
    are added, which can change the periods of the determinant connection.

    A candidate is accepted only if it decreases the volume enough, stays resolved and keeps the
    Maslov integers (and, for isodrastic descent, the fractional periods). No vertex moves more
    than DESCENT_MAX_DISPLACEMENT times the shortest edge per iteration.

    Returns:
        (best mesh, trace); trace.stop_reason is one of converged, stationary, volume_collapse,
        stagnation, iteration_cap.
    """
    tol = config.L_MINIMAL_TOL if tol is None else tol
    fields = [hamiltonian_field(f) for f in basis]
    if not isodrastic:
        b1 = 1 if mesh.topology == LOOP else 2
        fields += [flux_field(index) for index in range(b1)]
    trace = FlowTrace(label, initial_step, description=f"{len(basis)} Hamiltonians" + ("" if isodrastic else " + flux"))
    record = measure(mesh, 0, 0.0, track_curvature=True)
    trace.steps.append(record)
    if record.maslov_integers is None:
        raise NotApplicableError(f"{label}: Maslov integers undefined at the start ({record.note})")
    initial_volume = volume = record.volume
    step = initial_step
    time = 0.0
    trace.stop_reason = "iteration_cap"
    for iteration in range(max_iterations + 1):
        if record.l_norm < tol:
            trace.stop_reason = "converged"
            break
        if iteration == max_iterations:
            break
        sff = second_fundamental_form(mesh)
        g = mesh.model.metric(mesh.vertices)
        tangents = discrete_tangents(mesh)
        weights = vertex_volumes(mesh)
        chol = np.linalg.cholesky(g)
        columns = [_normal_part(mesh, vf(mesh), tangents, g) for vf in fields]
        rows = np.sqrt(weights)[:, None]
        design = np.stack([(rows * np.einsum("vji,vj->vi", chol, c)).reshape(-1) for c in columns], axis=1)
        target = (rows * np.einsum("vji,vj->vi", chol, sff.mean_curvature)).reshape(-1)
        coefficients, *_ = np.linalg.lstsq(design, target, rcond=1e-10)
        direction = sum(c * col for c, col in zip(coefficients, columns))
        slope = -float(np.sum(weights * np.einsum("vi,vij,vj->v", sff.mean_curvature, g, direction)))
        if slope > -config.DESCENT_GRADIENT_TOL:
            trace.stop_reason = "stationary"
            break
        speed = float(np.sqrt(np.einsum("vi,vij,vj->v", direction, g, direction)).max())
        step = min(step, config.DESCENT_MAX_DISPLACEMENT * float(edge_lengths(mesh).min()) / speed)

        def combined(current, c=coefficients):
            return sum(ci * vf(current) for ci, vf in zip(c, fields))

        accepted = None
        while step >= config.DESCENT_MIN_STEP:
            try:
                candidate = _advance(mesh, combined, step)
                candidate_record = measure(candidate, iteration + 1, time + step, track_curvature=True)
            except (MeshError, DomainError, RefinementError) as error:
                LOGGER.debug(f"Descent candidate rejected at step {step:g}: {error}")
            else:
                sufficient = candidate_record.volume <= volume + config.ARMIJO_SLOPE * step * slope + config.LINE_SEARCH_TOL * volume
                if sufficient and _same_class(candidate_record, record, isodrastic):
                    accepted = candidate
                    break
                if sufficient:
                    LOGGER.debug(f"Descent candidate at step {step:g} left the class: {candidate_record.maslov_integers}")
            step *= 0.5
        if accepted is None:
            trace.stop_reason = "stagnation"
            LOGGER.warning(f"{label}: line search stagnated at L-norm {record.l_norm:.3e}")
            break
        mesh, record, time = accepted, candidate_record, time + step
        volume = record.volume
        trace.steps.append(record)
        if volume < config.VOLUME_COLLAPSE_RATIO * initial_volume:
            record.note = "volume_collapse"
            trace.stop_reason = "volume_collapse"
            LOGGER.warning(f"{label}: volume fell below {config.VOLUME_COLLAPSE_RATIO:.0%} of the initial value")
            break
        step = min(2.0 * step, 1.0)
    trace.final_mesh = mesh
    LOGGER.info(f"{label}: {trace.stop_reason} after {len(trace.steps) - 1} iterations, volume {volume:.6f}")
    return mesh, trace
