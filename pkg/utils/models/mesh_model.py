from pydantic import BaseModel, Field
from typing import List, Literal

from utils.models.ambient_model import AmbientModelDocument


class MeshDocument(BaseModel):
    """Schema for a saved Lagrangian mesh."""
    topology: Literal["loop", "torus_grid"] = Field(..., description="Mesh topology")
    shape: List[int] = Field(..., description="Grid shape: [N] for loops, [N1, N2] for tori")
    vertices: List[List[float]] = Field(..., description="Chart coordinates per vertex")
    shifts: List[List[float]] = Field(..., description="Lattice translations picked up across each seam")
    model: AmbientModelDocument = Field(..., description="Ambient model the mesh lives in")
    mesh_id: str = Field(..., description="Content hash of the vertices")


class FormDocument(BaseModel):
    """Schema for a saved discrete form."""
    degree: int = Field(..., ge=0, le=2, description="Form degree")
    values: List[float] = Field(..., description="One value per cell of that degree")
    mesh_id: str = Field(..., description="Mesh the form lives on")
