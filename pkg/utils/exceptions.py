from typing import Any, Optional


class MaslovLabError(Exception):
    message = 'Computation failed!'

    def __init__(self, detail: Optional[str] = None, **data: Any):
        self.detail = detail
        self.data = data
        super().__init__(f"{self.message} {detail}" if detail else self.message)


class DomainError(MaslovLabError):
    message = 'Point outside the chart domain!'


class ModelConfigurationError(MaslovLabError):
    message = 'Invalid ambient model configuration!'


class UnsupportedModelError(MaslovLabError):
    message = 'Operation not supported for this ambient model!'


class DimensionError(MaslovLabError):
    message = 'Dimension mismatch!'


class MeshError(MaslovLabError):
    message = 'Invalid mesh!'


class NotLagrangianError(MaslovLabError):
    message = 'Submanifold is not Lagrangian!'


class DegreeError(MaslovLabError):
    message = 'Form degree not supported here!'


class CycleError(MaslovLabError):
    message = 'Cycle is not closed!'


class NumericalError(MaslovLabError):
    message = 'Linear solver did not converge!'


class RefinementError(MaslovLabError):
    message = 'Mesh too coarse, refine it!'


class UnresolvedMeshError(RefinementError):
    message = 'Connection angles not resolved by the mesh, refine it!'


class HalfIntegerBoundaryError(MaslovLabError):
    message = 'Period on the half-integer boundary!'


class NotApplicableError(MaslovLabError):
    message = 'Operation not applicable!'


class StepRejectedError(MaslovLabError):
    message = 'Deformation step rejected!'


class ConfigError(MaslovLabError):
    message = 'Invalid scenario configuration!'
