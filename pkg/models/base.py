"""
Base module for array-carrying domain models.

Domain models hold numpy arrays and (for systems) callables, so they share
one pydantic configuration and a converter used by their validators.
"""

from typing import Any

import numpy as np
from pydantic import BaseModel


def as_float_array(value: Any) -> np.ndarray:
    """Convert nested lists / arrays to a float ndarray."""
    return np.asarray(value, dtype=float)


def require_finite(value: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(value)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return value


def require_spd(value: np.ndarray, name: str, tol: float = 0.0) -> np.ndarray:
    """Check that value is a symmetric positive definite matrix."""
    if value.ndim != 2 or value.shape[0] != value.shape[1]:
        raise ValueError(f"{name} must be square, got shape {value.shape}")
    if not np.allclose(value, value.T, atol=1e-12, rtol=1e-10):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(0.5 * (value + value.T))[0] <= tol:
        raise ValueError(f"{name} must have strictly positive eigenvalues")
    return 0.5 * (value + value.T)


class ArrayModel(BaseModel):
    """Pydantic model that may carry numpy arrays and callables."""

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False
        json_encoders = {np.ndarray: lambda a: a.tolist()}
