from pydantic import BaseModel, Field, field_validator
from typing import Dict, List, Literal, Optional

import config
from utils.models.ambient_model import AmbientModelDocument


class ScenarioConfig(BaseModel):
    """Schema for one scenario run. A JSON file supplies it; command-line flags override fields."""
    scenario: str = Field(..., description="Registered scenario name")
    model: Optional[AmbientModelDocument] = Field(None, description="Ambient model override")
    n: Optional[int] = Field(None, ge=16, description="Loop vertex count")
    n1: Optional[int] = Field(None, ge=16, description="Torus grid size along s")
    n2: Optional[int] = Field(None, ge=16, description="Torus grid size along t")
    ladder: Optional[List[int]] = Field(None, description="Refinement ladder for convergence studies")
    target: Optional[str] = Field(None, description="Scenario refined by the convergence study")
    theta: Optional[float] = Field(None, gt=0.0, lt=3.14159265358979, description="Latitude polar angle")
    epsilon: Optional[float] = Field(None, description="Potential perturbation amplitude")
    delta: Optional[float] = Field(None, description="Graph/perturbation amplitude of the submanifold")
    steps: Optional[int] = Field(None, ge=0, description="Flow steps or descent iterations")
    step_size: Optional[float] = Field(None, gt=0.0, description="Flow step size")
    seed: int = Field(0, description="Seed for random Hamiltonians and forms")
    families: Optional[int] = Field(None, ge=1, description="Number of random Hamiltonians")
    basis_degree: Optional[int] = Field(None, ge=1, le=8, description="Hamiltonian basis degree")
    power: int = Field(1, ge=1, description="Power k of the determinant")
    r_values: List[float] = Field(default_factory=lambda: [0.5, 1.0, 10.0], description="Half-weight totals")
    tolerances: Dict[str, float] = Field(default_factory=dict, description="Check threshold overrides")
    output_dir: Optional[str] = Field(None, description="Output directory")
    formats: List[Literal["json", "csv", "svg"]] = Field(default_factory=lambda: list(config.OUTPUT_FORMATS))
    threads: Optional[int] = Field(None, ge=1, description="Worker count")

    @field_validator("ladder")
    @classmethod
    def ladder_increasing(cls, value):
        if value is not None and (len(value) < 2 or any(b <= a for a, b in zip(value, value[1:]))):
            raise ValueError("ladder needs at least two strictly increasing resolutions")
        return value

    def tolerance(self, name: str, default: float) -> float:
        return self.tolerances.get(name, default)
