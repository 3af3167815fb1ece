"""
Dynamics package: system registry, linearization and nominal trajectories.
"""

from typing import Callable, Dict

from errors import InvalidArgumentError
from models.system import NonlinearSystem

from .nominal import DenseNominal, dense_nominal, integrate_nominal, resample, trajectory_defects
from .system_model import (
    estimate_lipschitz,
    evaluate_dynamics,
    linearize,
    linearize_trajectory,
    lure_decompose,
    nonlinearity_residual,
    phi_jacobian,
    reconstruction_residual,
)
from .unicycle import make_unicycle

SYSTEMS: Dict[str, Callable[[], NonlinearSystem]] = {
    "unicycle": make_unicycle,
}


def create_system(name: str) -> NonlinearSystem:
    """Factory function returning a built-in system by name."""
    try:
        return SYSTEMS[name]()
    except KeyError:
        raise InvalidArgumentError(f"unknown system '{name}'; available: {sorted(SYSTEMS)}") from None


__all__ = [
    "create_system",
    "evaluate_dynamics",
    "linearize",
    "phi_jacobian",
    "lure_decompose",
    "nonlinearity_residual",
    "reconstruction_residual",
    "estimate_lipschitz",
    "linearize_trajectory",
    "integrate_nominal",
    "resample",
    "trajectory_defects",
    "DenseNominal",
    "dense_nominal",
]
