"""
Validation of synthesized funnels.

run_validation aggregates every asserted check into a ValidationReport;
the inter-sample diagnostics are attached but never affect `passed`.
"""

import logging
from typing import Optional

from models.problem import FunnelProblem
from models.report import DisturbancePolicy, MonteCarloSection, ValidationReport
from models.solution import FunnelSolution
from models.system import LureLinearization, NonlinearSystem
from synthesis.funnel import ContinuousFunnel

from .checks import (
    C_CONDITION_TOLERANCE,
    CONTAINMENT_TOLERANCE,
    DENSE_POINTS,
    DLMI_TOLERANCE,
    check_c_condition,
    check_containment,
    check_dlmi,
    check_intersample,
    funnel_metrics,
    project_ellipsoid,
    project_funnel_2d,
)
from .monte_carlo import MC_TOLERANCE, monte_carlo_invariance, sample_ellipsoid_surface

logger = logging.getLogger(__name__)


def run_validation(
    true_system: NonlinearSystem,
    lure_system: NonlinearSystem,
    sol: FunnelSolution,
    problem: FunnelProblem,
    linearization: LureLinearization,
    funnel: ContinuousFunnel,
    seed: int = 0,
    n_E: int = 50,
    n_Ec: int = 50,
    policy: DisturbancePolicy = DisturbancePolicy.PIECEWISE_CONSTANT,
    points_per_interval: int = DENSE_POINTS,
    mc_tolerance: float = MC_TOLERANCE,
    intersample: bool = True,
) -> ValidationReport:
    """Run every check on a solved funnel.

    Args:
        true_system: System propagated in the Monte-Carlo runs
        lure_system: Lur'e residual system whose selectors define H
        sol: The funnel solution
        problem: The synthesis problem it solves
        linearization: Node Jacobians used in the synthesis
        funnel: Continuous reconstruction of sol
        seed: Disturbance seed
        n_E: Samples on the boundary of E(t_0); 0 together with n_Ec skips Monte-Carlo
        n_Ec: Samples on the boundary of E_c(t_0)
        policy: Disturbance time structure
        points_per_interval: Dense grid resolution
        mc_tolerance: Relative tolerance of the Monte-Carlo checks
        intersample: Attach dense inter-sample diagnostics

    Returns:
        The complete report
    """
    dlmi = check_dlmi(sol, lure_system, linearization)
    dlmi_passed = all(r <= DLMI_TOLERANCE for r in dlmi)
    containment = check_containment(sol, problem)
    containment_passed = all(r.residual >= -CONTAINMENT_TOLERANCE for r in containment)
    c_worst = check_c_condition(sol, max(points_per_interval, 10))
    c_passed = c_worst >= -C_CONDITION_TOLERANCE

    monte_carlo: Optional[MonteCarloSection] = None
    if n_E + n_Ec > 0:
        monte_carlo = monte_carlo_invariance(
            true_system, funnel, n_E=n_E, n_Ec=n_Ec, policy=policy, seed=seed,
            tolerance=mc_tolerance, points_per_interval=points_per_interval,
        )
    diagnostics = check_intersample(funnel, problem, lure_system, points_per_interval) if intersample else None
    passed = dlmi_passed and containment_passed and c_passed
    if monte_carlo is not None:
        passed = passed and monte_carlo.passed
    report = ValidationReport(
        dlmi_residuals=dlmi,
        dlmi_tolerance=DLMI_TOLERANCE,
        dlmi_passed=dlmi_passed,
        containment=containment,
        containment_tolerance=CONTAINMENT_TOLERANCE,
        containment_passed=containment_passed,
        c_condition_worst=c_worst,
        c_condition_tolerance=C_CONDITION_TOLERANCE,
        c_condition_passed=c_passed,
        monte_carlo=monte_carlo,
        intersample=diagnostics,
        metrics=funnel_metrics(sol),
        passed=passed,
    )
    if passed:
        logger.info("Validation passed")
    else:
        for failure in report.failures():
            logger.warning("Validation failure: %s", failure)
    return report


__all__ = [
    "run_validation",
    "check_dlmi",
    "check_containment",
    "check_c_condition",
    "check_intersample",
    "monte_carlo_invariance",
    "sample_ellipsoid_surface",
    "project_funnel_2d",
    "project_ellipsoid",
    "funnel_metrics",
]
