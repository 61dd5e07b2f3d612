from pydantic import BaseModel, Field
from typing import Any, Dict, List, Optional


class MaslovReportDocument(BaseModel):
    """Schema for a determinant-connection decomposition."""
    mesh_id: str = Field(..., description="Mesh the connection was computed on")
    power: int = Field(1, description="Power k of the determinant (1: det, 2: classical det^2)")
    maslov_integers: Optional[List[int]] = Field(None, description="Maslov integer per H1 basis cycle")
    periods: List[float] = Field(..., description="Periods of k*eta per cycle")
    fractional_periods: List[float] = Field(..., description="Fractional parts of the harmonic periods, in (-1/2, 1/2]")
    curvature_norm: float = Field(..., description="Max curvature density of eta")
    coexact_norm: float = Field(..., description="L2 norm of the coexact part")
    is_flat: bool
    trivial_periods: bool
    bounded_periods: bool
    is_bohr_sommerfeld: bool
    is_special: bool
    phase_variation: Optional[float] = Field(None, description="max - min of the phase")
    phase: Optional[List[float]] = Field(None, description="Mean-zero phase per vertex")


class CurvatureReportDocument(BaseModel):
    """Schema for the mean-curvature / Ricci checks on one mesh."""
    mesh_id: str
    alpha_periods: List[float] = Field(..., description="Periods of the mean curvature form")
    eta_periods: List[float] = Field(..., description="Periods of the determinant connection")
    transport_residual: float = Field(..., description="Max per-edge density |eta - int alpha_H| / length")
    ricci_residual: Optional[float] = Field(None, description="Max face density |d alpha_H + rho|_S|")
    l_minimal: bool
    h_minimal: bool
    harmonic_norm: float
    coexact_norm: float
    exact_norm: float


class ConvergenceRowDocument(BaseModel):
    resolution: int
    residuals: Dict[str, float]


class ConvergenceDocument(BaseModel):
    """Schema for a refinement study: residuals by resolution and observed orders."""
    rows: List[ConvergenceRowDocument]
    orders: Dict[str, List[float]] = Field(..., description="Observed order log2(e_N / e_2N) per quantity")


class FlowStepDocument(BaseModel):
    step: int
    time: float
    volume: float
    lagrangian_residual: float
    mesh_id: str
    maslov_integers: Optional[List[int]] = Field(None, description="Recorded only while the bounded-periods guard passes")
    fractional_periods: Optional[List[float]] = None
    bohr_sommerfeld: Optional[bool] = None
    bohr_sommerfeld_defect: Optional[float] = None
    l_norm: Optional[float] = None
    h_norm: Optional[float] = None
    note: Optional[str] = None


class FlowTraceDocument(BaseModel):
    """Schema for one deformation trace."""
    label: str
    description: str = ""
    step_size: float
    stop_reason: str
    steps: List[FlowStepDocument]


class InvarianceDocument(BaseModel):
    """Schema for a Maslov invariance experiment over a family of deformations."""
    initial_integers: Optional[List[int]]
    constant: bool
    jumps: List[Dict[str, Any]]
    aborted: List[Dict[str, Any]]
    fractional_drift: List[float]
    traces: List[FlowTraceDocument]
