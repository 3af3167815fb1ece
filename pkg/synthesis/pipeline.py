"""
End-to-end preparation of the synthesis problem from a system and a nominal.

Stages: dense nominal, Lur'e residual system, sampled Lipschitz constants,
node linearization, linearized constraints and interval discretization.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import Field, validator

from dynamics.nominal import DenseNominal, check_defects, dense_nominal
from dynamics.system_model import (
    DEFAULT_INFLATION,
    DEFAULT_LIPSCHITZ_SAMPLES,
    estimate_lipschitz,
    linearize_trajectory,
    lure_decompose,
)
from errors import InvalidArgumentError
from models.base import ArrayModel, as_float_array, require_spd
from models.problem import EllipsoidalObstacle, FunnelProblem
from models.solution import SynthesisOutcome
from models.system import LureLinearization, NonlinearSystem
from models.trajectory import NominalTrajectory
from solvers import SolverConfig

from .discretization import DiscreteTransition, discretize_trajectory
from .funnel import solve
from .lmi import build_halfspaces

logger = logging.getLogger(__name__)


class FunnelSetup(ArrayModel):
    """User-facing synthesis parameters (everything but the system and nominal)."""

    alpha: float = Field(gt=0, description="Lyapunov decay rate")
    lambda_w: float = Field(gt=0, description="Disturbance multiplier")
    w_c: float = Field(gt=0, description="Weight on c_0")
    w_Q0: float = Field(gt=0, description="Weight on -log det Q_0")
    w_Qbar: float = Field(gt=0, description="Running weight on the max eigenvalue of Q")
    Q_i: np.ndarray = Field(description="Initial boundary matrix")
    Q_f: np.ndarray = Field(description="Final boundary matrix")
    obstacles: List[EllipsoidalObstacle] = Field(default_factory=list)
    input_lower: Optional[List[float]] = Field(default=None, description="Lower input bounds (-inf allowed)")
    input_upper: Optional[List[float]] = Field(default=None, description="Upper input bounds (inf allowed)")
    lipschitz_samples: int = Field(default=DEFAULT_LIPSCHITZ_SAMPLES, ge=2)
    lipschitz_inflation: float = Field(default=DEFAULT_INFLATION, ge=1.0)
    lipschitz_seed: int = Field(default=0, ge=0)
    q_min: float = Field(default=0.0, ge=0, description="Floor on lambda_min(Q_k); 0 disables it")

    @validator("Q_i", "Q_f", pre=True)
    def _coerce(cls, value: object) -> np.ndarray:
        return require_spd(as_float_array(value), "boundary matrix")


@dataclass
class PreparedSynthesis:
    """Everything the solver and the validation need besides the solution."""

    system: NonlinearSystem
    trajectory: NominalTrajectory
    nominal: DenseNominal
    linearization: LureLinearization
    transitions: List[DiscreteTransition]
    problem: FunnelProblem
    timings: Dict[str, float] = field(default_factory=dict)


def prepare(
    sys: NonlinearSystem,
    traj: NominalTrajectory,
    setup: FunnelSetup,
    gamma: Optional[np.ndarray] = None,
    discretize: bool = True,
) -> PreparedSynthesis:
    """Run every stage up to (not including) the conic solve.

    Args:
        sys: System with its raw lumped nonlinearity
        traj: Nominal trajectory
        setup: Synthesis parameters
        gamma: Known Lipschitz constants per node (from a stored funnel); the
            sampling stage is skipped when given
        discretize: Compute the interval transitions; checks of a stored
            funnel do not need them

    Raises:
        InvalidArgumentError: If gamma does not have one entry per node
        IntegrationError: If the dense nominal or a transition cannot be integrated
        DegenerateRegionError: If the Lipschitz sampling region is degenerate
        InfeasibleNominalError: If the nominal touches an obstacle
    """
    timings: Dict[str, float] = {}
    start = time.perf_counter()
    check_defects(sys, traj)
    nominal = dense_nominal(sys, traj)
    lure = lure_decompose(sys, nominal.argument)
    timings["nominal"] = time.perf_counter() - start

    start = time.perf_counter()
    if gamma is None:
        gamma = estimate_lipschitz(
            lure, traj, setup.Q_i,
            n_samples=setup.lipschitz_samples,
            inflation=setup.lipschitz_inflation,
            seed=setup.lipschitz_seed,
        )
    else:
        gamma = np.asarray(gamma, dtype=float)
        if gamma.shape != (traj.N + 1,):
            raise InvalidArgumentError(f"gamma must have {traj.N + 1} entries, got shape {gamma.shape}")
    linearization = linearize_trajectory(lure, traj, gamma)
    timings["linearization"] = time.perf_counter() - start
    logger.info("Lipschitz constants in [%.3e, %.3e]", gamma.min(), gamma.max())

    state_hs, input_hs = build_halfspaces(setup.obstacles, setup.input_lower, setup.input_upper, traj)
    problem = FunnelProblem(
        alpha=setup.alpha, lambda_w=setup.lambda_w,
        w_c=setup.w_c, w_Q0=setup.w_Q0, w_Qbar=setup.w_Qbar,
        Q_i=setup.Q_i, Q_f=setup.Q_f,
        state_halfspaces=state_hs, input_halfspaces=input_hs,
        gamma=gamma, obstacles=setup.obstacles,
        q_min=setup.q_min,
    )

    transitions: List[DiscreteTransition] = []
    if discretize:
        start = time.perf_counter()
        transitions = discretize_trajectory(lure, nominal, setup.alpha, setup.lambda_w)
        timings["discretization"] = time.perf_counter() - start
    return PreparedSynthesis(
        system=lure, trajectory=traj, nominal=nominal, linearization=linearization,
        transitions=transitions, problem=problem, timings=timings,
    )


def synthesize(
    sys: NonlinearSystem,
    traj: NominalTrajectory,
    setup: FunnelSetup,
    config: Optional[SolverConfig] = None,
) -> Tuple[PreparedSynthesis, SynthesisOutcome]:
    """Prepare and solve; returns the prepared data alongside the outcome."""
    prepared = prepare(sys, traj, setup)
    start = time.perf_counter()
    outcome = solve(
        prepared.problem, prepared.system, traj, prepared.linearization, prepared.transitions, config
    )
    prepared.timings["solve"] = time.perf_counter() - start
    return prepared, outcome
