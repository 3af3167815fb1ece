"""
Validation report models.

Reports hold plain Python lists and floats so that their JSON export is
deterministic for a given disturbance seed.
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class DisturbancePolicy(str, Enum):
    """Time structure of the unit-norm disturbance used in Monte-Carlo runs."""
    PIECEWISE_CONSTANT = "piecewise_constant"
    CONSTANT = "constant"
    ZERO = "zero"


class SampleTrace(BaseModel):
    """Outcome of one propagated Monte-Carlo sample."""
    index: int = Field(description="Sample index")
    kind: str = Field(description="'E' for samples on the boundary of E(t_0), 'Ec' for E_c(t_0)")
    V0: float = Field(description="Lyapunov value at t_0")
    max_V: float = Field(description="max_t V(t, eta(t))")
    max_cV: float = Field(description="max_t c(t) V(t, eta(t))")
    attractivity_residual: float = Field(
        description="max_t [V(t) - max(exp(-alpha (t - t_0)) V(t_0), 1)], relative to the bound"
    )
    passed: bool = Field(description="Invariance and attractivity checks hold for this sample")
    failed_integration: bool = Field(default=False, description="The integrator failed for this sample")
    message: str = Field(default="", description="Integrator message when failed_integration is set")
    times: List[float] = Field(default_factory=list, description="Dense time grid")
    V: List[float] = Field(default_factory=list, description="Lyapunov trace on the dense grid")


class MonteCarloSection(BaseModel):
    seed: int
    policy: DisturbancePolicy
    tolerance: float
    n_E: int
    n_Ec: int
    n_passed: int
    samples: List[SampleTrace] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.n_passed == len(self.samples)


class ContainmentResidual(BaseModel):
    node: int
    family: str = Field(description="'state' or 'input'")
    label: str
    margin: float = Field(description="b - a^T z_bar")
    support: float = Field(description="Support value of the funnel in direction a")
    residual: float = Field(description="margin - support; must be >= -tolerance")


class IntersampleDiagnostics(BaseModel):
    """Dense-grid diagnostics between nodes; informational only."""
    points_per_interval: int
    worst_dlmi_residual: float
    worst_dlmi_time: float
    worst_containment_residual: float
    worst_containment_time: float
    worst_containment_label: str = ""
    min_eig_Q: float
    min_eig_Q_time: float
    nodal_dlmi_residuals: List[float] = Field(default_factory=list)
    offenders: List[Dict[str, float]] = Field(
        default_factory=list,
        description="Dense points with positive DLMI residual or negative containment residual"
    )


class FunnelMetrics(BaseModel):
    entry_log_volume: float = Field(description="log det(Q_0 / c_0)")
    max_radius: List[float] = Field(description="sqrt(lambda_max(Q_k)) per node")


class ValidationReport(BaseModel):
    """Everything the validation stage checks about a synthesized funnel."""

    dlmi_residuals: List[float] = Field(description="lambda_max(H_k) per node")
    dlmi_tolerance: float
    dlmi_passed: bool
    containment: List[ContainmentResidual] = Field(default_factory=list)
    containment_tolerance: float
    containment_passed: bool
    c_condition_worst: float
    c_condition_tolerance: float
    c_condition_passed: bool
    monte_carlo: Optional[MonteCarloSection] = None
    intersample: Optional[IntersampleDiagnostics] = None
    metrics: Optional[FunnelMetrics] = None
    passed: bool = Field(description="All asserted checks pass; inter-sample diagnostics do not count")

    def failures(self) -> List[str]:
        """Short descriptions of the failed asserted checks."""
        messages: List[str] = []
        if not self.dlmi_passed:
            bad = [k for k, r in enumerate(self.dlmi_residuals) if r > self.dlmi_tolerance]
            messages.append(f"DLMI residual above {self.dlmi_tolerance:g} at node(s) {bad}")
        if not self.containment_passed:
            bad_c = sorted({(r.node, r.label) for r in self.containment if r.residual < -self.containment_tolerance})
            messages.append(f"containment violated at {bad_c}")
        if not self.c_condition_passed:
            messages.append(f"c(t) condition residual {self.c_condition_worst:.3e}")
        if self.monte_carlo is not None and not self.monte_carlo.passed:
            messages.append(
                f"Monte-Carlo: {self.monte_carlo.n_passed}/{len(self.monte_carlo.samples)} samples passed"
            )
            crashed = [s for s in self.monte_carlo.samples if s.failed_integration]
            if crashed:
                messages.append(f"integration failed for {len(crashed)} sample(s), first: {crashed[0].message}")
        return messages
