"""
Funnel solution models.

A solution stores the node values of the decision variables together with
the interpolation rules that define the continuous-time funnel: Y, nu, Z and
1/c are first-order-hold between nodes, c(t) is therefore the harmonic
interpolation of the node values, and Q(t) is the flow of the Lyapunov
matrix ODE (see synthesis.funnel.ContinuousFunnel).
"""

from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, root_validator, validator

from models.base import ArrayModel, as_float_array
from models.trajectory import foh_weights, uniform_grid


class SynthesisStatus(str, Enum):
    """Outcome of a synthesis run."""
    OPTIMAL = "optimal"
    OPTIMAL_INACCURATE = "optimal_inaccurate"
    INFEASIBLE = "infeasible"


class FunnelSolution(ArrayModel):
    """Node values of a solved funnel synthesis problem."""

    t_0: float = Field(description="Initial time")
    t_f: float = Field(description="Final time")
    Q: np.ndarray = Field(description="Q_k, shape (N+1, n_x, n_x)")
    Y: np.ndarray = Field(description="Y_k, shape (N+1, n_u, n_x)")
    K: np.ndarray = Field(description="K_k = Y_k Q_k^{-1}, shape (N+1, n_u, n_x)")
    c: np.ndarray = Field(description="c_k, shape (N+1,)")
    nu: np.ndarray = Field(description="nu_k, shape (N+1,)")
    vQ: np.ndarray = Field(description="v^Q_k, shape (N+1,)")
    Z: np.ndarray = Field(description="Z_k, shape (N+1, n_z, n_z)")
    gamma: np.ndarray = Field(description="Lipschitz constants used in the synthesis")
    alpha: float = Field(gt=0, description="Decay rate used in the synthesis")
    lambda_w: float = Field(gt=0, description="Disturbance multiplier used in the synthesis")
    x_bar: np.ndarray = Field(description="Nominal states the funnel wraps")
    u_bar: np.ndarray = Field(description="Nominal inputs the funnel wraps")
    status: SynthesisStatus = Field(default=SynthesisStatus.OPTIMAL, description="Solver status")
    objective: float = Field(default=float("nan"), description="Optimal objective value")
    warnings: List[str] = Field(default_factory=list, description="Conditioning and accuracy warnings")

    @validator("Q", "Y", "K", "c", "nu", "vQ", "Z", "gamma", "x_bar", "u_bar", pre=True)
    def _coerce(cls, value: object) -> np.ndarray:
        return as_float_array(value)

    @root_validator(skip_on_failure=True)
    def _check(cls, values: dict) -> dict:
        n = values["Q"].shape[0]
        for key in ("Y", "K", "c", "nu", "vQ", "Z", "gamma", "x_bar", "u_bar"):
            if values[key].shape[0] != n:
                raise ValueError(f"{key} must have {n} node entries")
        return values

    @property
    def N(self) -> int:
        return int(self.Q.shape[0] - 1)

    @property
    def n_x(self) -> int:
        return int(self.Q.shape[1])

    @property
    def n_u(self) -> int:
        return int(self.Y.shape[1])

    @property
    def times(self) -> np.ndarray:
        return uniform_grid(self.t_0, self.t_f, self.N)

    def interval_of(self, t: float) -> int:
        h = (self.t_f - self.t_0) / self.N
        k = int(np.floor((t - self.t_0) / h + 1e-12))
        return min(max(k, 0), self.N - 1)

    def weights_at(self, t: float) -> tuple:
        """(k, lambda_m, lambda_p) for the interval containing t."""
        k = self.interval_of(t)
        times = self.times
        lam_m, lam_p = foh_weights(t, times[k], times[k + 1])
        return k, lam_m, lam_p

    def c_at(self, t: float) -> float:
        """Harmonic interpolation c(t) = c_k c_{k+1} / (lambda_m c_{k+1} + lambda_p c_k)."""
        k, lam_m, lam_p = self.weights_at(t)
        c_k, c_k1 = float(self.c[k]), float(self.c[k + 1])
        return c_k * c_k1 / (lam_m * c_k1 + lam_p * c_k)

    def with_updates(self, **changes: object) -> "FunnelSolution":
        return self.copy(update=changes)


class InfeasibilityReport(BaseModel):
    """Diagnosis of an infeasible synthesis problem."""

    binding_families: List[str] = Field(
        default_factory=list,
        description="Constraint families that needed relaxation to restore feasibility"
    )
    slacks: Dict[str, float] = Field(
        default_factory=dict,
        description="Optimal elastic slack per constraint family"
    )
    worst_nodes: Dict[str, int] = Field(
        default_factory=dict,
        description="Node with the largest violation per binding family"
    )
    solver_status: str = Field(default="infeasible", description="Status reported by the solver")
    message: str = Field(default="", description="Human readable summary")


class SynthesisOutcome(BaseModel):
    """Result of solve(): either a funnel or an infeasibility diagnosis."""

    status: SynthesisStatus
    solution: Optional[FunnelSolution] = None
    infeasibility: Optional[InfeasibilityReport] = None

    @property
    def feasible(self) -> bool:
        return self.solution is not None
