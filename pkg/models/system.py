"""
Nonlinear system interface and its Lur'e linearization along a trajectory.

A system is described by its vector field f(t, x, u, w) together with a
lumped nonlinearity phi(t, q), q = Cx + Du + Gw, entering the state rates
through E. The selector matrices E, C, D, G are constant. The structural
assumption is that f - E phi(t, Cx + Du + Gw) is affine in (x, u, w); the
simplest admissible choice is E = I, q = (x, u, w), phi = f.

Example:
    system = NonlinearSystem(
        name="pendulum",
        n_x=2, n_u=1, n_w=1, n_p=1, n_q=1,
        f=pendulum_rhs,
        phi=lambda t, q: np.sin(q),
        E=[[0.0], [1.0]], C=[[1.0, 0.0]], D=[[0.0]], G=[[0.0]],
    )
"""

from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import Field, root_validator, validator

from models.base import ArrayModel, as_float_array, require_finite

VectorField = Callable[[float, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
Nonlinearity = Callable[[float, np.ndarray], np.ndarray]
JacobianMap = Callable[[float, np.ndarray, np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]
NonlinearityJacobian = Callable[[float, np.ndarray], np.ndarray]


class NonlinearSystem(ArrayModel):
    """Continuous-time dynamics x' = f(t, x, u, w) with Lur'e selectors."""

    name: str = Field(
        default="custom",
        description="Registry name of the system"
    )
    n_x: int = Field(ge=1, description="State dimension")
    n_u: int = Field(ge=1, description="Input dimension")
    n_w: int = Field(ge=1, description="Disturbance dimension")
    n_p: int = Field(ge=0, description="Dimension of the lumped nonlinearity p (0 for linear systems)")
    n_q: int = Field(ge=0, description="Dimension of the nonlinearity argument q (0 for linear systems)")
    f: VectorField = Field(
        description="Vector field f(t, x, u, w) returning the state derivative"
    )
    phi: Optional[Nonlinearity] = Field(
        default=None,
        description="Lumped nonlinearity phi(t, q); required when n_p > 0"
    )
    E: np.ndarray = Field(description="n_x x n_p matrix injecting p into the state rates")
    C: np.ndarray = Field(description="n_q x n_x state selector of q")
    D: np.ndarray = Field(description="n_q x n_u input selector of q")
    G: np.ndarray = Field(description="n_q x n_w disturbance selector of q")
    jacobian: Optional[JacobianMap] = Field(
        default=None,
        description="Analytic (A, B, F) = (df/dx, df/du, df/dw); finite differences are used when absent"
    )
    phi_jacobian: Optional[NonlinearityJacobian] = Field(
        default=None,
        description="Analytic d phi / d q; finite differences are used when absent"
    )

    @validator("E", "C", "D", "G", pre=True)
    def _coerce(cls, value: object) -> np.ndarray:
        return require_finite(as_float_array(value), "selector matrix")

    @root_validator(skip_on_failure=True)
    def _check_shapes(cls, values: dict) -> dict:
        n_x, n_u, n_w = values["n_x"], values["n_u"], values["n_w"]
        n_p, n_q = values["n_p"], values["n_q"]
        expected = {
            "E": (n_x, n_p),
            "C": (n_q, n_x),
            "D": (n_q, n_u),
            "G": (n_q, n_w),
        }
        for key, shape in expected.items():
            matrix = values[key]
            if matrix.size == 0 and 0 in shape:
                values[key] = np.zeros(shape)
                continue
            if matrix.shape != shape:
                raise ValueError(f"{key} must have shape {shape}, got {matrix.shape}")
        if (n_p == 0) != (n_q == 0):
            raise ValueError("n_p and n_q must both be zero (linear system) or both positive")
        if n_p > 0 and values.get("phi") is None:
            raise ValueError("phi is required when n_p > 0")
        return values

    @property
    def is_linear(self) -> bool:
        return self.n_p == 0

    @property
    def n_z(self) -> int:
        """Size of the DLMI block matrix H."""
        return self.n_x + self.n_p + self.n_w + self.n_q


class LureLinearization(ArrayModel):
    """Node-wise Jacobians and Lipschitz constants along a nominal trajectory."""

    times: np.ndarray = Field(description="Node times t_k, shape (N+1,)")
    A: np.ndarray = Field(description="df/dx at the nominal, shape (N+1, n_x, n_x)")
    B: np.ndarray = Field(description="df/du at the nominal, shape (N+1, n_x, n_u)")
    F: np.ndarray = Field(description="df/dw at the nominal, shape (N+1, n_x, n_w)")
    gamma: np.ndarray = Field(description="Local Lipschitz constants gamma_k >= 0, shape (N+1,)")

    @validator("times", "A", "B", "F", "gamma", pre=True)
    def _coerce(cls, value: object) -> np.ndarray:
        return require_finite(as_float_array(value), "linearization data")

    @validator("gamma")
    def _nonnegative(cls, value: np.ndarray) -> np.ndarray:
        if np.any(value < 0):
            raise ValueError("gamma_k must be nonnegative")
        return value

    @root_validator(skip_on_failure=True)
    def _same_grid(cls, values: dict) -> dict:
        n = values["times"].shape[0]
        for key in ("A", "B", "F", "gamma"):
            if values[key].shape[0] != n:
                raise ValueError(f"{key} must have one entry per node ({n}), got {values[key].shape[0]}")
        return values

    @property
    def n_nodes(self) -> int:
        return int(self.times.shape[0])
