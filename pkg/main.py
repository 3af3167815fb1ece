"""
Funnel Synth - Invariant Funnels for Lipschitz Nonlinear Systems
================================================================

Synthesizes a time-varying ellipsoidal funnel, a linear feedback law and an
invariant support function around a nominal trajectory by solving one
multiple-shooting semidefinite program, and validates the result.

Example:
    system = create_system("unicycle")
    traj = integrate_nominal(system, [0.0, 0.0, 0.0], benchmark_inputs(), 0.0, 5.0, 30)
    prepared, outcome = synthesize(system, traj, setup, SolverConfig())
"""

import sys

from cli import RunConfig, load_config, main
from dynamics import create_system, dense_nominal, estimate_lipschitz, integrate_nominal, linearize
from dynamics.unicycle import benchmark_inputs
from models import (
    DisturbancePolicy,
    EllipsoidalObstacle,
    FunnelProblem,
    FunnelSolution,
    InputSchedule,
    NominalTrajectory,
    NonlinearSystem,
    SynthesisOutcome,
    ValidationReport,
)
from solvers import SolverBackend, SolverConfig, create_solver
from storage import read_funnel, read_trajectory_csv, write_funnel, write_trajectory_csv
from synthesis import ContinuousFunnel, FunnelSetup, prepare, solve, synthesize
from validation import run_validation

__all__ = [
    "NonlinearSystem",
    "NominalTrajectory",
    "InputSchedule",
    "EllipsoidalObstacle",
    "FunnelProblem",
    "FunnelSolution",
    "SynthesisOutcome",
    "ValidationReport",
    "DisturbancePolicy",
    "SolverBackend",
    "SolverConfig",
    "create_solver",
    "create_system",
    "integrate_nominal",
    "dense_nominal",
    "linearize",
    "estimate_lipschitz",
    "benchmark_inputs",
    "FunnelSetup",
    "prepare",
    "solve",
    "synthesize",
    "ContinuousFunnel",
    "run_validation",
    "read_funnel",
    "write_funnel",
    "read_trajectory_csv",
    "write_trajectory_csv",
    "RunConfig",
    "load_config",
    "main",
]

if __name__ == "__main__":
    sys.exit(main())
