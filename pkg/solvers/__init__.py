"""
Solver package

Factory and exports for the conic solver back ends.
"""

import logging
from typing import TYPE_CHECKING, Tuple

from errors import SolverError

from .base import BaseSolver
from .config import SolverBackend, SolverConfig, SolverResponse, SolverStatus
from .providers.clarabel import ClarabelSolver
from .providers.scs import SCSSolver

if TYPE_CHECKING:
    from synthesis.program import ConicProgram

logger = logging.getLogger(__name__)


def create_solver(config: SolverConfig) -> BaseSolver:
    """Factory function to create solver instances."""
    backends = {
        SolverBackend.CLARABEL: ClarabelSolver,
        SolverBackend.SCS: SCSSolver,
    }
    return backends[config.backend](config)


def solve_with_fallback(program: "ConicProgram", config: SolverConfig) -> Tuple[BaseSolver, SolverResponse]:
    """Solve a program, retrying once with config.fallback on a numerical failure.

    Infeasible and unbounded statuses are returned as they are; only a
    SolverError from the primary back end triggers the retry. The retry drops
    additional_params since they are specific to the primary back end.

    Returns:
        The solver holding the primal values and its response

    Raises:
        SolverError: If the primary fails and no fallback is configured, or
            the fallback fails as well
    """
    solver = create_solver(config)
    solver.load(program)
    try:
        return solver, solver.solve()
    except SolverError as exc:
        if config.fallback is None or config.fallback is config.backend:
            raise
        logger.warning("%s; retrying with %s", exc, config.fallback.value)
        retry = config.copy(update={
            "backend": config.fallback,
            "tolerance": max(config.tolerance, config.fallback_tolerance),
            "additional_params": {},
            "fallback": None,
        })
        solver = create_solver(retry)
        solver.load(program)
        return solver, solver.solve()


__all__ = [
    "BaseSolver",
    "SolverBackend",
    "SolverConfig",
    "SolverResponse",
    "SolverStatus",
    "create_solver",
    "solve_with_fallback",
]
