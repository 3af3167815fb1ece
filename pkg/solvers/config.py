"""Configuration module for conic solver back ends and their responses.

Example:
    config = SolverConfig(
        backend=SolverBackend.CLARABEL,
        tolerance=1e-8,
        max_iter=500
    )
"""

from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field


class SolverBackend(str, Enum):
    """Supported conic solvers (both handle PSD and exponential cones)."""
    CLARABEL = "clarabel"
    SCS = "scs"


class SolverStatus(str, Enum):
    OPTIMAL = "optimal"
    OPTIMAL_INACCURATE = "optimal_inaccurate"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ERROR = "error"


class SolverResponse(BaseModel):
    """Standardized solver response."""
    status: SolverStatus = Field(description="Mapped termination status")
    raw_status: str = Field(default="", description="Status string reported by the back end")
    objective: float = Field(default=float("nan"), description="Optimal objective value")
    solve_time: float = Field(default=0.0, description="Back-end solve time in seconds")
    iterations: int = Field(default=0, description="Back-end iteration count")
    backend: SolverBackend = Field(description="Back end that produced the response")
    metadata: Dict[str, Any] = Field(
        default_factory=dict,
        description="Back-end specific diagnostics (setup time, residuals)"
    )


class SolverConfig(BaseModel):
    """Configuration for the conic solver."""
    backend: SolverBackend = Field(
        default=SolverBackend.CLARABEL,
        description="Conic solver to use"
    )
    tolerance: float = Field(
        default=1e-8,
        gt=0.0,
        description="Gap and feasibility tolerance passed to the back end"
    )
    max_iter: int = Field(
        default=500,
        ge=1,
        description="Iteration limit of the back end"
    )
    verbose: bool = Field(default=False, description="Forward back-end iteration logs to stdout")
    equilibrate: bool = Field(
        default=True,
        description="Ruiz row/column equilibration of the problem data inside the back end"
    )
    additional_params: Dict[str, Any] = Field(
        default_factory=dict,
        description="Additional back-end options passed through unchanged"
    )
    fallback: Optional[SolverBackend] = Field(
        default=SolverBackend.SCS,
        description="Back end retried when the primary one fails numerically; None disables the retry"
    )
    fallback_tolerance: float = Field(
        default=1e-7,
        gt=0.0,
        description="Tolerance floor of the fallback solve"
    )
