"""Shared helpers: column-major linear algebra and logging setup."""

from .linalg import (
    lambda_max,
    lambda_min,
    lower_triangle_indices,
    psd_sqrt,
    solve_right_spd,
    symmetrize,
    unvec,
    vec,
)
from .logging_utils import configure_logging

__all__ = [
    "vec",
    "unvec",
    "symmetrize",
    "lower_triangle_indices",
    "lambda_max",
    "lambda_min",
    "psd_sqrt",
    "solve_right_spd",
    "configure_logging",
]
