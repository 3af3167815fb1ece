"""Domain models (pydantic) shared by every pipeline stage."""

from models.problem import EllipsoidalObstacle, FunnelProblem, HalfspaceSet
from models.report import DisturbancePolicy, ValidationReport
from models.solution import (
    FunnelSolution,
    InfeasibilityReport,
    SynthesisOutcome,
    SynthesisStatus,
)
from models.system import LureLinearization, NonlinearSystem
from models.trajectory import InputSchedule, NominalTrajectory

__all__ = [
    "NonlinearSystem",
    "LureLinearization",
    "NominalTrajectory",
    "InputSchedule",
    "FunnelProblem",
    "HalfspaceSet",
    "EllipsoidalObstacle",
    "FunnelSolution",
    "InfeasibilityReport",
    "SynthesisOutcome",
    "SynthesisStatus",
    "ValidationReport",
    "DisturbancePolicy",
]
