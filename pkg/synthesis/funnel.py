"""
Solving the funnel program, extracting gains and rebuilding the funnel in
continuous time.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from dynamics.nominal import DenseNominal
from errors import IntegrationError, InvalidArgumentError, SolverError
from models.problem import FunnelProblem
from models.solution import FunnelSolution, InfeasibilityReport, SynthesisOutcome, SynthesisStatus
from models.system import LureLinearization, NonlinearSystem
from models.trajectory import NominalTrajectory
from solvers import SolverConfig, SolverStatus, solve_with_fallback
from utils.linalg import solve_right_spd, symmetrize, unvec, vec

from .discretization import DiscreteTransition, interpolate_A_B
from .lmi import lyapunov_rate
from .program import ConicProgram, RELAXABLE_FAMILIES, assemble

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
BINDING_SLACK = 1e-6
MIN_EIGENVALUE = 1e-9


def compute_gains(Q: np.ndarray, Y: np.ndarray) -> Tuple[np.ndarray, List[str]]:
    """K_k = Y_k Q_k^{-1} per node, with conditioning warnings."""
    gains = []
    warnings: List[str] = []
    for k in range(Q.shape[0]):
        K, cond = solve_right_spd(Q[k], Y[k])
        if cond > CONDITION_LIMIT:
            message = f"Q_{k} is ill-conditioned (cond = {cond:.2e}); K_{k} may be inaccurate"
            logger.warning(message)
            warnings.append(message)
        gains.append(K)
    return np.array(gains), warnings


def extract_gains(sol: FunnelSolution) -> List[np.ndarray]:
    """Feedback gains K_k = Y_k Q_k^{-1} of a solution."""
    K, _ = compute_gains(sol.Q, sol.Y)
    return list(K)


def _collect_solution(
    program: ConicProgram,
    problem: FunnelProblem,
    traj: NominalTrajectory,
    status: SynthesisStatus,
    objective: float,
) -> FunnelSolution:
    solver_vars = program.variables
    n = program.n_nodes
    Q = np.array([symmetrize(np.asarray(solver_vars[f"Q_{k}"].value, dtype=float)) for k in range(n)])
    Y = np.array([np.asarray(solver_vars[f"Y_{k}"].value, dtype=float).reshape(program.n_u, program.n_x) for k in range(n)])
    Z = np.array([symmetrize(np.asarray(solver_vars[f"Z_{k}"].value, dtype=float)) for k in range(n)])
    K, warnings = compute_gains(Q, Y)
    if status is SynthesisStatus.OPTIMAL_INACCURATE:
        warnings.append("solver reported optimal_inaccurate")
    for k in range(n):
        lam = float(np.linalg.eigvalsh(Q[k])[0])
        if lam < MIN_EIGENVALUE:
            message = f"lambda_min(Q_{k}) = {lam:.2e} is below {MIN_EIGENVALUE:g}"
            logger.warning(message)
            warnings.append(message)
    return FunnelSolution(
        t_0=traj.t_0,
        t_f=traj.t_f,
        Q=Q, Y=Y, K=K, Z=Z,
        c=np.asarray(solver_vars["c"].value, dtype=float),
        nu=np.asarray(solver_vars["nu"].value, dtype=float),
        vQ=np.asarray(solver_vars["vQ"].value, dtype=float),
        gamma=problem.gamma,
        alpha=problem.alpha,
        lambda_w=problem.lambda_w,
        x_bar=traj.x,
        u_bar=traj.u,
        status=status,
        objective=objective,
        warnings=warnings,
    )


def _slack_node(family: str, index: int, n_nodes: int) -> int:
    """Node of the index-th slack entry of a family."""
    if family.startswith("boundary"):
        return 0 if family == "boundary_initial" else n_nodes - 1
    if family == "c_condition":
        # c_k <= 1 rows first, then the decay rows for k = 1..N
        return index if index < n_nodes else index - n_nodes + 1
    return index


def diagnose_infeasibility(program: ConicProgram, config: Optional[SolverConfig] = None) -> InfeasibilityReport:
    """Name the constraint families responsible for infeasibility.

    Solves the elastic program and reports every family whose optimal slack
    exceeds 1e-6, with the node of its largest slack.

    Args:
        program: A program assembled with elastic=True
        config: Solver settings

    Returns:
        The diagnosis; binding_families is empty if the elastic solve fails
    """
    if not program.elastic:
        raise InvalidArgumentError("diagnose_infeasibility needs an elastic program")
    try:
        _, response = solve_with_fallback(program, config or SolverConfig())
    except SolverError as exc:
        return InfeasibilityReport(solver_status="infeasible", message=f"elastic re-solve failed: {exc}")
    slacks: Dict[str, float] = {}
    worst: Dict[str, int] = {}
    binding: List[str] = []
    for family in RELAXABLE_FAMILIES:
        variable = program.slacks.get(family)
        if variable is None or variable.value is None:
            continue
        values = np.atleast_1d(np.asarray(variable.value, dtype=float))
        slacks[family] = float(values.max())
        worst[family] = _slack_node(family, int(values.argmax()), program.n_nodes)
        if slacks[family] > BINDING_SLACK:
            binding.append(family)
    if binding:
        message = "infeasible; relaxation needed in " + ", ".join(
            f"{name} (slack {slacks[name]:.2e} at node {worst[name]})" for name in binding
        )
    else:
        message = f"infeasible; elastic re-solve ended {response.raw_status} without a clear binding family"
    logger.info(message)
    return InfeasibilityReport(
        binding_families=binding,
        slacks=slacks,
        worst_nodes={name: worst[name] for name in binding},
        solver_status="infeasible",
        message=message,
    )


def solve(
    problem: FunnelProblem,
    sys: NonlinearSystem,
    traj: NominalTrajectory,
    linearization: LureLinearization,
    transitions: Sequence[DiscreteTransition],
    config: Optional[SolverConfig] = None,
) -> SynthesisOutcome:
    """Assemble and solve the funnel program.

    Returns:
        A SynthesisOutcome carrying the FunnelSolution, or an
        InfeasibilityReport when the program is primal infeasible

    Raises:
        SolverError: If the solver fails numerically
        AssemblyError: If the inputs are inconsistent
        InfeasibleNominalError: If the nominal violates a linearized constraint
    """
    config = config or SolverConfig()
    program = assemble(problem, sys, traj, linearization, transitions)
    _, response = solve_with_fallback(program, config)
    if response.status is SolverStatus.INFEASIBLE:
        logger.warning("Funnel program is infeasible; running elastic diagnosis")
        elastic = assemble(problem, sys, traj, linearization, transitions, elastic=True)
        report = diagnose_infeasibility(elastic, config)
        return SynthesisOutcome(status=SynthesisStatus.INFEASIBLE, infeasibility=report)
    if response.status is SolverStatus.UNBOUNDED:
        raise SolverError("funnel program reported unbounded", status=response.raw_status, diagnostics=response.metadata)
    status = SynthesisStatus.OPTIMAL if response.status is SolverStatus.OPTIMAL else SynthesisStatus.OPTIMAL_INACCURATE
    solution = _collect_solution(program, problem, traj, status, response.objective)
    if response.backend is not config.backend:
        solution.warnings.append(f"{config.backend.value} failed; solved with {response.backend.value}")
    logger.info("Funnel synthesized: status %s, objective %.6g, c_0 = %.4g", status.value, response.objective, solution.c[0])
    return SynthesisOutcome(status=status, solution=solution)


class ContinuousFunnel:
    """Continuous-time funnel rebuilt from node values.

    Y, nu, Z and 1/c are first-order-hold between nodes, c(t) is their
    harmonic counterpart, and Q(t) follows the matrix ODE

        Q' = Q A(t)^T + Y(t)^T B(t)^T + A(t) Q + B(t) Y(t) + (alpha + lambda_w) Q + Z11(t)

    from Q_k on each interval, with A(t), B(t) evaluated along the dense nominal.

    Example:
        funnel = ContinuousFunnel(solution, system, dense_nominal(system, traj))
        Q, Y, c, K = funnel.evaluate(1.3)
    """

    def __init__(self, sol: FunnelSolution, sys: NonlinearSystem, nominal: DenseNominal):
        self.solution = sol
        self.system = sys
        self.nominal = nominal
        self._times = sol.times
        self._segments = [self._integrate(k) for k in range(sol.N)]

    def _integrate(self, k: int) -> object:
        sol, n_x = self.solution, self.solution.n_x
        t_k, t_k1 = self._times[k], self._times[k + 1]

        def rhs(t: float, q: np.ndarray) -> np.ndarray:
            lam_m, lam_p = self.weights(t, k)
            A, B = interpolate_A_B(self.system, self.nominal, t, k)
            Q = unvec(q, n_x, n_x)
            Y = lam_m * sol.Y[k] + lam_p * sol.Y[k + 1]
            Z11 = lam_m * sol.Z[k][:n_x, :n_x] + lam_p * sol.Z[k + 1][:n_x, :n_x]
            return vec(lyapunov_rate(Q, Y, A, B, sol.alpha, sol.lambda_w) + Z11)

        result = solve_ivp(
            rhs, (t_k, t_k1), vec(sol.Q[k]), method="DOP853", rtol=1e-10, atol=1e-12,
            dense_output=True, max_step=(t_k1 - t_k) / 10,
        )
        if not result.success:
            raise IntegrationError(f"funnel reconstruction failed on interval {k}: {result.message}", interval=k)
        return result.sol

    def weights(self, t: float, k: int) -> Tuple[float, float]:
        h = self._times[k + 1] - self._times[k]
        lam_p = min(max((t - self._times[k]) / h, 0.0), 1.0)
        return 1.0 - lam_p, lam_p

    def _locate(self, t: float) -> Tuple[Optional[int], int]:
        """(node index if t is a node, interval index)."""
        k = self.solution.interval_of(t)
        for node in (k, k + 1):
            if abs(t - self._times[node]) <= 1e-12 * max(1.0, abs(t)):
                return node, k
        return None, k

    def Q(self, t: float) -> np.ndarray:
        node, k = self._locate(t)
        if node is not None:
            return self.solution.Q[node].copy()
        return symmetrize(unvec(self._segments[k](t), self.solution.n_x, self.solution.n_x))

    def Y(self, t: float) -> np.ndarray:
        k = self.solution.interval_of(t)
        lam_m, lam_p = self.weights(t, k)
        return lam_m * self.solution.Y[k] + lam_p * self.solution.Y[k + 1]

    def nu(self, t: float) -> float:
        k = self.solution.interval_of(t)
        lam_m, lam_p = self.weights(t, k)
        return float(lam_m * self.solution.nu[k] + lam_p * self.solution.nu[k + 1])

    def Z(self, t: float) -> np.ndarray:
        k = self.solution.interval_of(t)
        lam_m, lam_p = self.weights(t, k)
        return lam_m * self.solution.Z[k] + lam_p * self.solution.Z[k + 1]

    def c(self, t: float) -> float:
        return self.solution.c_at(t)

    def K(self, t: float) -> np.ndarray:
        K, _ = solve_right_spd(self.Q(t), self.Y(t))
        return K

    def Qdot(self, t: float) -> np.ndarray:
        """Q'(t) = M(t) + Z11(t) from the defining ODE."""
        k = self.solution.interval_of(t)
        A, B = interpolate_A_B(self.system, self.nominal, t, k)
        n_x = self.solution.n_x
        M = lyapunov_rate(self.Q(t), self.Y(t), A, B, self.solution.alpha, self.solution.lambda_w)
        return symmetrize(M + self.Z(t)[:n_x, :n_x])

    def evaluate(self, t: float) -> Tuple[np.ndarray, np.ndarray, float, np.ndarray]:
        """(Q(t), Y(t), c(t), K(t))."""
        return self.Q(t), self.Y(t), self.c(t), self.K(t)

    def endpoint_mismatch(self) -> np.ndarray:
        """||Q(t_{k+1}^-) - Q_{k+1}|| / max(1, ||Q_{k+1}||) per interval."""
        n_x = self.solution.n_x
        errors = np.zeros(self.solution.N)
        for k, segment in enumerate(self._segments):
            end = symmetrize(unvec(segment(self._times[k + 1]), n_x, n_x))
            target = self.solution.Q[k + 1]
            errors[k] = np.linalg.norm(end - target) / max(1.0, float(np.linalg.norm(target)))
        return errors


def reconstruct_continuous(funnel: ContinuousFunnel, t: float) -> Tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """(Q(t), Y(t), c(t), K(t)) of a reconstructed funnel."""
    return funnel.evaluate(t)


def shooting_residuals(sol: FunnelSolution, transitions: Sequence[DiscreteTransition]) -> np.ndarray:
    """Full residual ||vec Q_{k+1} - predicted|| / max(1, ||vec Q_{k+1}||) per interval."""
    n_x = sol.n_x
    residuals = np.zeros(len(transitions))
    for T in transitions:
        k = T.interval
        predicted = T.propagate(
            vec(sol.Q[k]), vec(sol.Y[k]), vec(sol.Y[k + 1]),
            vec(sol.Z[k][:n_x, :n_x]), vec(sol.Z[k + 1][:n_x, :n_x]),
        )
        target = vec(sol.Q[k + 1])
        residuals[k] = np.linalg.norm(target - predicted) / max(1.0, float(np.linalg.norm(target)))
    return residuals
