"""
Synthesis problem data: decay/disturbance parameters, weights, boundary
matrices and per-node linearized constraints.
"""

from typing import List

import numpy as np
from pydantic import Field, root_validator, validator
from scipy.optimize import linprog

from models.base import ArrayModel, as_float_array, require_finite, require_spd


class EllipsoidalObstacle(ArrayModel):
    """Keep-out region {p : ||S (p - center)|| < 1} on selected state coordinates."""

    center: np.ndarray = Field(description="Obstacle center in the selected coordinates")
    shape: np.ndarray = Field(description="Square matrix S; the obstacle boundary is ||S (p - center)|| = 1")
    coordinates: List[int] = Field(
        default_factory=lambda: [0, 1],
        description="State indices the obstacle lives on (default: planar position)"
    )
    label: str = Field(default="obstacle", description="Name used in reports")

    @validator("center", "shape", pre=True)
    def _coerce(cls, value: object) -> np.ndarray:
        return require_finite(as_float_array(value), "obstacle data")

    @root_validator(skip_on_failure=True)
    def _check(cls, values: dict) -> dict:
        d = len(values["coordinates"])
        if values["center"].shape != (d,):
            raise ValueError(f"center must have {d} entries")
        if values["shape"].shape != (d, d):
            raise ValueError(f"shape must be {d}x{d}")
        if abs(np.linalg.det(values["shape"])) <= 1e-12:
            raise ValueError("shape matrix must be nonsingular")
        return values

    def selector(self, n_x: int) -> np.ndarray:
        """Matrix P picking the obstacle coordinates out of the state."""
        P = np.zeros((len(self.coordinates), n_x))
        for row, index in enumerate(self.coordinates):
            P[row, index] = 1.0
        return P


class HalfspaceSet(ArrayModel):
    """Per-node halfspaces a_i^T z <= b_i, i = 1..m."""

    a: np.ndarray = Field(description="Normals, shape (N+1, m, n)")
    b: np.ndarray = Field(description="Offsets, shape (N+1, m)")
    labels: List[str] = Field(default_factory=list, description="One label per halfspace")

    @validator("a", "b", pre=True)
    def _coerce(cls, value: object) -> np.ndarray:
        return require_finite(as_float_array(value), "halfspace data")

    @root_validator(skip_on_failure=True)
    def _check(cls, values: dict) -> dict:
        a, b = values["a"], values["b"]
        if a.ndim != 3 or b.ndim != 2 or a.shape[:2] != b.shape:
            raise ValueError(f"inconsistent halfspace shapes a{a.shape} b{b.shape}")
        if not values["labels"]:
            values["labels"] = [f"halfspace[{i}]" for i in range(a.shape[1])]
        elif len(values["labels"]) != a.shape[1]:
            raise ValueError("one label per halfspace is required")
        return values

    @classmethod
    def empty(cls, n_nodes: int, n: int) -> "HalfspaceSet":
        return cls(a=np.zeros((n_nodes, 0, n)), b=np.zeros((n_nodes, 0)), labels=[])

    @property
    def m(self) -> int:
        return int(self.a.shape[1])

    @property
    def n_nodes(self) -> int:
        return int(self.a.shape[0])


def _polytope_is_bounded(a: np.ndarray, b: np.ndarray) -> bool:
    """True if {z : a z <= b} is nonempty and bounded."""
    n = a.shape[1]
    for i in range(n):
        for sign in (1.0, -1.0):
            cost = np.zeros(n)
            cost[i] = -sign
            result = linprog(cost, A_ub=a, b_ub=b, bounds=[(None, None)] * n, method="highs")
            if result.status != 0:
                return False
    return True


class FunnelProblem(ArrayModel):
    """All parameters of the funnel synthesis problem."""

    alpha: float = Field(gt=0, description="Lyapunov decay rate")
    lambda_w: float = Field(gt=0, description="S-procedure multiplier of the disturbance bound")
    w_c: float = Field(gt=0, description="Weight on c_0 (funnel entry size)")
    w_Q0: float = Field(gt=0, description="Weight on -log det Q_0")
    w_Qbar: float = Field(gt=0, description="Running weight on the max eigenvalue of Q")
    Q_i: np.ndarray = Field(description="Initial boundary matrix: Q_0 >= c_0 Q_i")
    Q_f: np.ndarray = Field(description="Final boundary matrix: Q_N <= c_N Q_f")
    state_halfspaces: HalfspaceSet = Field(description="Linearized state constraints per node")
    input_halfspaces: HalfspaceSet = Field(description="Linearized input constraints per node")
    gamma: np.ndarray = Field(description="Lipschitz constant gamma_k per node")
    obstacles: List[EllipsoidalObstacle] = Field(
        default_factory=list,
        description="Source obstacles of the state halfspaces (kept for reporting)"
    )
    epsilon: float = Field(default=1e-9, gt=0, description="Lower bound used for strict inequalities")
    gamma_min: float = Field(default=1e-9, gt=0, description="Smallest admissible gamma_k for nonlinear systems")
    q_min: float = Field(
        default=0.0,
        ge=0,
        description="Optional floor Q_k >= q_min I on every node; 0 leaves Q_k bounded only by epsilon checks"
    )

    @validator("Q_i", "Q_f", pre=True)
    def _coerce_matrix(cls, value: object) -> np.ndarray:
        return as_float_array(value)

    @validator("Q_i", "Q_f")
    def _spd(cls, value: np.ndarray) -> np.ndarray:
        return require_spd(value, "boundary matrix")

    @validator("gamma", pre=True)
    def _coerce_gamma(cls, value: object) -> np.ndarray:
        gamma = require_finite(np.atleast_1d(as_float_array(value)), "gamma")
        if np.any(gamma < 0):
            raise ValueError("gamma_k must be nonnegative")
        return gamma

    @root_validator(skip_on_failure=True)
    def _check(cls, values: dict) -> dict:
        n_x = values["Q_i"].shape[0]
        if values["Q_f"].shape != (n_x, n_x):
            raise ValueError("Q_i and Q_f must have the same shape")
        n_nodes = values["gamma"].shape[0]
        for key in ("state_halfspaces", "input_halfspaces"):
            hs: HalfspaceSet = values[key]
            if hs.n_nodes != n_nodes:
                raise ValueError(f"{key} must have {n_nodes} nodes, got {hs.n_nodes}")
        if values["state_halfspaces"].a.shape[2] != n_x:
            raise ValueError("state halfspace normals must have n_x entries")
        inputs: HalfspaceSet = values["input_halfspaces"]
        if inputs.m > 0:
            seen: List[np.ndarray] = []
            for k in range(inputs.n_nodes):
                data = np.hstack([inputs.a[k], inputs.b[k][:, None]])
                if any(np.array_equal(data, other) for other in seen):
                    continue
                seen.append(data)
                if not _polytope_is_bounded(inputs.a[k], inputs.b[k]):
                    raise ValueError(f"input halfspaces at node {k} do not bound a nonempty bounded polytope")
        return values

    @property
    def n_x(self) -> int:
        return int(self.Q_i.shape[0])

    @property
    def n_nodes(self) -> int:
        return int(self.gamma.shape[0])

    @property
    def N(self) -> int:
        return self.n_nodes - 1

    def running_weight(self, t_0: float, t_f: float) -> float:
        """w_Q = w_Qbar (t_f - t_0) / N (lower sum over the intervals)."""
        return self.w_Qbar * (t_f - t_0) / self.N

    def replace(self, **changes: object) -> "FunnelProblem":
        data = {key: getattr(self, key) for key in self.__fields__}
        data.update(changes)
        return FunnelProblem(**data)

