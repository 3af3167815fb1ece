"""SCS first-order back end.

Useful as a fallback when Clarabel struggles; its accuracy is lower, so
responses are often reported as optimal_inaccurate at tight tolerances.
"""

from typing import Any, Dict

import cvxpy as cp

from errors import SolverError

from ..base import BaseSolver
from ..config import SolverBackend


class SCSSolver(BaseSolver):
    """SCS integration."""

    backend_kind = SolverBackend.SCS

    def _initialize_backend(self) -> None:
        if cp.SCS not in cp.installed_solvers():
            raise SolverError("SCS is not installed", status="unavailable")
        self._backend = cp.SCS

    def _options(self) -> Dict[str, Any]:
        return {
            "eps_abs": self.config.tolerance,
            "eps_rel": self.config.tolerance,
            "max_iters": max(self.config.max_iter, 10000),
            "normalize": self.config.equilibrate,
        }
