"""
Nominal trajectory and input schedule models.
"""

from typing import List, Tuple

import numpy as np
from pydantic import Field, root_validator, validator

from models.base import ArrayModel, as_float_array, require_finite


def uniform_grid(t_0: float, t_f: float, N: int) -> np.ndarray:
    """Nodes t_k = t_0 + (k/N)(t_f - t_0), k = 0..N."""
    return t_0 + (np.arange(N + 1, dtype=float) / N) * (t_f - t_0)


def foh_weights(t: float, t_k: float, t_k1: float) -> Tuple[float, float]:
    """First-order-hold weights (lambda_m, lambda_p) on [t_k, t_k1].

    Both weights lie in [0, 1] and sum to one.
    """
    h = t_k1 - t_k
    lam_p = min(max((t - t_k) / h, 0.0), 1.0)
    return 1.0 - lam_p, lam_p


class InputSchedule(ArrayModel):
    """Piecewise-linear input profile given by knots.

    Example:
        schedule = InputSchedule(times=[0.0, 5.0], values=[[1.0, 0.0], [1.0, 0.0]])
        schedule(2.5)  # -> array([1., 0.])
    """

    times: np.ndarray = Field(description="Strictly increasing knot times")
    values: np.ndarray = Field(description="Input value at each knot, shape (n_knots, n_u)")

    @validator("times", "values", pre=True)
    def _coerce(cls, value: object) -> np.ndarray:
        return require_finite(as_float_array(value), "input schedule")

    @root_validator(skip_on_failure=True)
    def _check(cls, values: dict) -> dict:
        times, inputs = values["times"], values["values"]
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
            values["values"] = inputs
        if times.ndim != 1 or times.shape[0] != inputs.shape[0]:
            raise ValueError("one input value per knot time is required")
        if times.shape[0] >= 2 and np.any(np.diff(times) <= 0):
            raise ValueError("knot times must be strictly increasing")
        return values

    @classmethod
    def constant(cls, value: List[float], t_0: float, t_f: float) -> "InputSchedule":
        return cls(times=[t_0, t_f], values=[value, value])

    def __call__(self, t: float) -> np.ndarray:
        if self.times.shape[0] == 1:
            return self.values[0].copy()
        return np.array([np.interp(t, self.times, self.values[:, j]) for j in range(self.values.shape[1])])


class NominalTrajectory(ArrayModel):
    """State/input samples (x_bar_k, u_bar_k) on a uniform grid.

    Inputs are held piecewise-linear between nodes; the nominal disturbance
    is zero.
    """

    t_0: float = Field(description="Initial time")
    t_f: float = Field(description="Final time")
    x: np.ndarray = Field(description="Nominal states, shape (N+1, n_x)")
    u: np.ndarray = Field(description="Nominal inputs, shape (N+1, n_u)")

    @validator("x", "u", pre=True)
    def _coerce(cls, value: object) -> np.ndarray:
        return require_finite(np.atleast_2d(as_float_array(value)), "trajectory samples")

    @root_validator(skip_on_failure=True)
    def _check(cls, values: dict) -> dict:
        if values["t_f"] <= values["t_0"]:
            raise ValueError("t_f must be greater than t_0")
        if values["x"].shape[0] != values["u"].shape[0]:
            raise ValueError("x and u must have the same number of nodes")
        if values["x"].shape[0] < 2:
            raise ValueError("a trajectory needs at least two nodes")
        return values

    @property
    def N(self) -> int:
        """Number of intervals."""
        return int(self.x.shape[0] - 1)

    @property
    def n_x(self) -> int:
        return int(self.x.shape[1])

    @property
    def n_u(self) -> int:
        return int(self.u.shape[1])

    @property
    def h(self) -> float:
        return (self.t_f - self.t_0) / self.N

    @property
    def times(self) -> np.ndarray:
        return uniform_grid(self.t_0, self.t_f, self.N)

    def interval_of(self, t: float) -> int:
        """Index k of the interval [t_k, t_{k+1}] containing t (last interval for t = t_f)."""
        k = int(np.floor((t - self.t_0) / self.h + 1e-12))
        return min(max(k, 0), self.N - 1)

    def input_at(self, t: float) -> np.ndarray:
        """First-order-hold interpolation of the nominal input."""
        k = self.interval_of(t)
        times = self.times
        lam_m, lam_p = foh_weights(t, times[k], times[k + 1])
        return lam_m * self.u[k] + lam_p * self.u[k + 1]

    def grid_uniformity_error(self) -> float:
        """max_k |(t_{k+1} - t_k) - (t_f - t_0)/N|."""
        return float(np.max(np.abs(np.diff(self.times) - self.h)))
