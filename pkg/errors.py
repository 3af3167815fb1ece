"""
Exception hierarchy for funnel synthesis.

Every error raised on purpose by this package derives from FunnelError so
callers (the CLI in particular) can separate expected failures from bugs.
An infeasible synthesis problem is not an error: it is reported through
SynthesisOutcome.
"""

from typing import Any, Dict, List, Optional, Tuple


class FunnelError(Exception):
    """Base class for all funnel synthesis errors."""


class InvalidArgumentError(FunnelError, ValueError):
    """Raised when an argument has the wrong dimension or an invalid value."""


class LinearizationError(FunnelError):
    """Raised when a Jacobian contains NaN or Inf entries."""


class DegenerateRegionError(FunnelError):
    """Raised when a Lipschitz sampling region has zero radius."""


class IntegrationError(FunnelError):
    """Raised when the ODE integrator fails on an interval."""

    def __init__(self, message: str, interval: Optional[int] = None):
        super().__init__(message)
        self.interval = interval


class DiscretizationError(IntegrationError):
    """Raised when the FOH transition matrices of an interval cannot be computed."""


class InfeasibleNominalError(FunnelError):
    """Raised when the nominal trajectory itself violates a linearized constraint.

    Attributes:
        node: Index of the temporal node
        constraint: Index of the halfspace within its family
        label: Human readable constraint label, if known
    """

    def __init__(self, node: Optional[int], constraint: Optional[int], margin: float, label: str = ""):
        where = f"node {node}" if node is not None else "nominal point"
        what = label or f"constraint {constraint}"
        super().__init__(
            f"nominal is not strictly feasible at {where} for {what}: margin b - a'x = {margin:.3e} <= 0"
        )
        self.node = node
        self.constraint = constraint
        self.margin = margin
        self.label = label


class AssemblyError(FunnelError):
    """Raised when the conic program cannot be assembled from its inputs."""


class SolverError(FunnelError):
    """Raised when the conic solver fails numerically.

    Attributes:
        status: Raw status string reported by the back end
        diagnostics: Iterate information (iterations, residuals, timings)
    """

    def __init__(self, message: str, status: str = "error", diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.status = status
        self.diagnostics = diagnostics or {}


class UnsupportedVersionError(FunnelError):
    """Raised when a funnel file carries a version other than funnel-v1."""


class ConfigValidationError(FunnelError):
    """Raised when a run configuration is invalid.

    All offending fields are collected before raising.
    """

    def __init__(self, errors: List[Tuple[str, str]]):
        self.errors = errors
        lines = "\n".join(f"  {field}: {message}" for field, message in errors)
        super().__init__(f"invalid configuration ({len(errors)} error(s)):\n{lines}")

    @property
    def fields(self) -> List[str]:
        return [field for field, _ in self.errors]
