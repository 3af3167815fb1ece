"""Base module for conic solver integrations.

Solvers see a ConicProgram (a cvxpy problem plus its named variables) and
nothing else, so the synthesis code is independent of the back end.

Example:
    class CustomSolver(BaseSolver):
        def _initialize_backend(self) -> None:
            import custom_solver
            self._backend = "CUSTOM"

        def _options(self) -> Dict[str, Any]:
            return {"eps": self.config.tolerance}
"""

import logging
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any, Dict, Optional

import cvxpy as cp
import numpy as np

from errors import SolverError

from .config import SolverBackend, SolverConfig, SolverResponse, SolverStatus

if TYPE_CHECKING:
    from synthesis.program import ConicProgram

logger = logging.getLogger(__name__)

_STATUS_MAP = {
    cp.OPTIMAL: SolverStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolverStatus.OPTIMAL_INACCURATE,
    cp.INFEASIBLE: SolverStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolverStatus.INFEASIBLE,
    cp.UNBOUNDED: SolverStatus.UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: SolverStatus.UNBOUNDED,
}


class BaseSolver(ABC):
    """Abstract base class for conic solver back ends.

    Attributes:
        config (SolverConfig): Tolerances and options
        program (ConicProgram): The loaded program, if any
        _backend: cvxpy solver name (lazy loaded)
    """

    backend_kind: SolverBackend

    def __init__(self, config: SolverConfig):
        """Initialize the solver with configuration.

        Args:
            config: Back end, tolerance and iteration settings
        """
        self.config = config
        self.program: Optional["ConicProgram"] = None
        self._backend: Optional[str] = None

    @abstractmethod
    def _initialize_backend(self) -> None:
        """Import the back end and record its cvxpy solver name.

        Raises:
            SolverError: If the back end is not installed
        """

    @abstractmethod
    def _options(self) -> Dict[str, Any]:
        """Back-end keyword options derived from the configuration."""

    @property
    def backend(self) -> str:
        """Lazy initialization of the back end."""
        if self._backend is None:
            self._initialize_backend()
        assert self._backend is not None
        return self._backend

    def load(self, program: "ConicProgram") -> None:
        """Attach a conic program; replaces any previously loaded one."""
        self.program = program

    def solve(self) -> SolverResponse:
        """Solve the loaded program.

        Returns:
            The mapped status and solver statistics. Infeasibility is a status,
            not an exception.

        Raises:
            SolverError: If nothing is loaded or the back end fails numerically
        """
        if self.program is None:
            raise SolverError("no program loaded")
        options = {**self._options(), **self.config.additional_params}
        problem = self.program.problem
        try:
            problem.solve(solver=self.backend, verbose=self.config.verbose, **options)
        except cp.SolverError as exc:
            raise SolverError(
                f"{self.backend_kind.value} failed: {exc}",
                status="solver_error",
                diagnostics=self._diagnostics(problem),
            ) from exc
        status = _STATUS_MAP.get(problem.status, SolverStatus.ERROR)
        if status is SolverStatus.ERROR:
            raise SolverError(
                f"{self.backend_kind.value} returned status '{problem.status}'",
                status=str(problem.status),
                diagnostics=self._diagnostics(problem),
            )
        stats = problem.solver_stats
        response = SolverResponse(
            status=status,
            raw_status=str(problem.status),
            objective=float(problem.value) if problem.value is not None and np.isfinite(problem.value) else float("nan"),
            solve_time=float(stats.solve_time or 0.0) if stats is not None else 0.0,
            iterations=int(stats.num_iters or 0) if stats is not None else 0,
            backend=self.backend_kind,
            metadata=self._diagnostics(problem),
        )
        logger.info(
            "%s finished: %s, objective %.6g, %d iterations",
            self.backend_kind.value, response.raw_status, response.objective, response.iterations,
        )
        return response

    def primal(self, name: str) -> np.ndarray:
        """Primal value of a named program variable after a solve.

        Raises:
            SolverError: If the variable is unknown or has no value
        """
        if self.program is None:
            raise SolverError("no program loaded")
        try:
            variable = self.program.variables[name]
        except KeyError:
            raise SolverError(f"unknown variable '{name}'") from None
        if variable.value is None:
            raise SolverError(f"variable '{name}' has no value; solve first")
        return np.asarray(variable.value, dtype=float)

    @staticmethod
    def _diagnostics(problem: cp.Problem) -> Dict[str, Any]:
        stats = problem.solver_stats
        if stats is None:
            return {}
        return {
            "solver": stats.solver_name,
            "solve_time": stats.solve_time,
            "setup_time": stats.setup_time,
            "iterations": stats.num_iters,
        }
