"""Clarabel interior-point back end.

Clarabel handles PSD and exponential cones natively and is the default for
the funnel synthesis program.

Example:
    solver = ClarabelSolver(SolverConfig(tolerance=1e-9))
    solver.load(program)
    response = solver.solve()
"""

from typing import Any, Dict

import cvxpy as cp

from errors import SolverError

from ..base import BaseSolver
from ..config import SolverBackend


class ClarabelSolver(BaseSolver):
    """Clarabel integration."""

    backend_kind = SolverBackend.CLARABEL

    def _initialize_backend(self) -> None:
        if cp.CLARABEL not in cp.installed_solvers():
            raise SolverError("Clarabel is not installed", status="unavailable")
        self._backend = cp.CLARABEL

    def _options(self) -> Dict[str, Any]:
        tol = self.config.tolerance
        return {
            "tol_gap_abs": tol,
            "tol_gap_rel": tol,
            "tol_feas": tol,
            "max_iter": self.config.max_iter,
            "equilibrate_enable": self.config.equilibrate,
        }
