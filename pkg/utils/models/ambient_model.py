from pydantic import BaseModel, Field
from typing import Any, Dict, List, Literal, Optional


class FourierModeSchema(BaseModel):
    """Schema for one term c * cos(k . x + phase) of a perturbation potential."""
    amplitude: float = Field(..., description="Coefficient c of the mode")
    wave_vector: List[float] = Field(..., description="Wave vector k in chart coordinates (length 2n)")
    phase: float = Field(0.0, description="Phase offset of the mode")


class AmbientModelDocument(BaseModel):
    """Schema for a serialized ambient model: {"kind": ..., "params": {...}}."""
    kind: Literal["flat_complex", "round_sphere", "football_sphere", "flat_torus", "potential_kahler"] = Field(
        ..., description="Model kind"
    )
    params: Dict[str, Any] = Field(default_factory=dict, description="Kind-specific parameters")


class FlatComplexParams(BaseModel):
    n: int = Field(1, ge=1, le=2, description="Complex dimension")


class SphereParams(BaseModel):
    radius: float = Field(1.0, gt=0.0, description="Sphere radius R")
    amplitude: float = Field(0.0, description="Football deformation amplitude a (round sphere: 0)")
    chart: Literal["stereographic", "antipodal"] = Field("stereographic", description="Active chart")


class FlatTorusParams(BaseModel):
    n: int = Field(1, ge=1, le=2, description="Complex dimension")
    lattice: Optional[List[List[float]]] = Field(
        None, description="Lattice basis as rows (2n vectors of length 2n); default 2*pi*Id"
    )


class PotentialKahlerParams(BaseModel):
    base: AmbientModelDocument = Field(..., description="Flat base model (flat_complex or flat_torus)")
    modes: List[FourierModeSchema] = Field(default_factory=list, description="Perturbation potential h")
    epsilon: float = Field(0.0, description="Perturbation amplitude")
