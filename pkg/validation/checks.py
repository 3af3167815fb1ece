"""
Algebraic checks of a synthesized funnel: node DLMI residuals, constraint
containment, the c(t) condition, dense inter-sample diagnostics, 2D
projections and summary metrics.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from dynamics.system_model import linearize
from errors import InvalidArgumentError
from models.problem import FunnelProblem, HalfspaceSet
from models.report import ContainmentResidual, FunnelMetrics, IntersampleDiagnostics
from models.solution import FunnelSolution
from models.system import LureLinearization, NonlinearSystem
from synthesis.funnel import ContinuousFunnel
from synthesis.lmi import build_H, funnel_entry_log_volume, lyapunov_rate, max_radius
from utils.linalg import lambda_max, lambda_min

logger = logging.getLogger(__name__)

DLMI_TOLERANCE = 1e-6
CONTAINMENT_TOLERANCE = 1e-7
C_CONDITION_TOLERANCE = 1e-9
DENSE_POINTS = 20


def node_H(sol: FunnelSolution, sys: NonlinearSystem, linearization: LureLinearization, k: int) -> np.ndarray:
    """H_k rebuilt from node values with Q'_k = M_k + Z11_k."""
    n_x = sol.n_x
    A, B, F = linearization.A[k], linearization.B[k], linearization.F[k]
    Qdot = lyapunov_rate(sol.Q[k], sol.Y[k], A, B, sol.alpha, sol.lambda_w) + sol.Z[k][:n_x, :n_x]
    return build_H(
        sol.Q[k], Qdot, sol.Y[k], float(sol.nu[k]), float(sol.gamma[k]), sol.alpha, sol.lambda_w,
        A, B, F, sys.E, sys.C, sys.D, sys.G,
    )


def check_dlmi(sol: FunnelSolution, sys: NonlinearSystem, linearization: LureLinearization) -> List[float]:
    """lambda_max(H_k) per node."""
    residuals = [lambda_max(node_H(sol, sys, linearization, k)) for k in range(sol.N + 1)]
    logger.debug("DLMI residuals: max %.3e", max(residuals))
    return residuals


def _support(a: np.ndarray, shape: np.ndarray, c: float) -> float:
    """max of a^T eta over {eta : eta^T shape^{-1} eta <= 1/c}."""
    return float(np.sqrt(max(a @ shape @ a, 0.0) / c))


def check_containment(sol: FunnelSolution, problem: FunnelProblem) -> List[ContainmentResidual]:
    """margin - support per node and halfspace, for states and inputs."""
    residuals: List[ContainmentResidual] = []
    for k in range(sol.N + 1):
        c_k = float(sol.c[k])
        Q_k, K_k = sol.Q[k], sol.K[k]
        for family, hs, z_bar, shape in (
            ("state", problem.state_halfspaces, sol.x_bar[k], Q_k),
            ("input", problem.input_halfspaces, sol.u_bar[k], K_k @ Q_k @ K_k.T),
        ):
            for i in range(hs.m):
                a, b = hs.a[k, i], float(hs.b[k, i])
                margin = b - float(a @ z_bar)
                support = _support(a, shape, c_k)
                residuals.append(ContainmentResidual(
                    node=k, family=family, label=hs.labels[i],
                    margin=margin, support=support, residual=margin - support,
                ))
    return residuals


def dense_times(sol: FunnelSolution, points_per_interval: int = DENSE_POINTS) -> np.ndarray:
    """points_per_interval samples per interval, nodes included once."""
    times = sol.times
    grid = [np.linspace(times[k], times[k + 1], points_per_interval, endpoint=False) for k in range(sol.N)]
    return np.concatenate(grid + [times[-1:]])


def check_c_condition(sol: FunnelSolution, points_per_interval: int = DENSE_POINTS) -> float:
    """Worst value of 1/c(t) - max(1, exp(-alpha (t - t_0)) / c_0) on a dense grid."""
    if points_per_interval < 10:
        raise InvalidArgumentError("at least 10 points per interval are required")
    c_0 = float(sol.c[0])
    worst = np.inf
    for t in dense_times(sol, points_per_interval):
        envelope = max(1.0, np.exp(-sol.alpha * (t - sol.t_0)) / c_0)
        worst = min(worst, 1.0 / sol.c_at(t) - envelope)
    return float(worst)


def _interpolated_halfspaces(hs: HalfspaceSet, k: int, lam_m: float, lam_p: float) -> Tuple[np.ndarray, np.ndarray]:
    return lam_m * hs.a[k] + lam_p * hs.a[k + 1], lam_m * hs.b[k] + lam_p * hs.b[k + 1]


def check_intersample(
    funnel: ContinuousFunnel,
    problem: FunnelProblem,
    sys: NonlinearSystem,
    points_per_interval: int = DENSE_POINTS,
) -> IntersampleDiagnostics:
    """Dense-grid DLMI residuals, containment margins and PD check of Q(t).

    Halfspace data, gamma and nu are interpolated linearly between nodes.
    Results are informational; offenders are logged as warnings.
    """
    sol = funnel.solution
    n_x = sol.n_x
    worst_dlmi = (-np.inf, sol.t_0)
    worst_cont = (np.inf, sol.t_0, "")
    min_eig = (np.inf, sol.t_0)
    offenders = []
    for t in dense_times(sol, points_per_interval):
        k = sol.interval_of(t)
        lam_m, lam_p = funnel.weights(t, k)
        x_bar = funnel.nominal.state(t, k)
        u_bar = funnel.nominal.input(t)
        A, B, F = linearize(sys, t, x_bar, u_bar)
        Q = funnel.Q(t)
        Y = funnel.Y(t)
        c = funnel.c(t)
        Qdot = lyapunov_rate(Q, Y, A, B, sol.alpha, sol.lambda_w) + funnel.Z(t)[:n_x, :n_x]
        gamma = float(lam_m * sol.gamma[k] + lam_p * sol.gamma[k + 1])
        H = build_H(Q, Qdot, Y, funnel.nu(t), gamma, sol.alpha, sol.lambda_w, A, B, F, sys.E, sys.C, sys.D, sys.G)
        residual = lambda_max(H)
        if residual > worst_dlmi[0]:
            worst_dlmi = (residual, float(t))
        eig = lambda_min(Q)
        if eig < min_eig[0]:
            min_eig = (eig, float(t))
        K = funnel.K(t)
        point_cont = np.inf
        for family, hs, z_bar, shape in (
            ("state", problem.state_halfspaces, x_bar, Q),
            ("input", problem.input_halfspaces, u_bar, K @ Q @ K.T),
        ):
            a_t, b_t = _interpolated_halfspaces(hs, k, lam_m, lam_p)
            for i in range(hs.m):
                value = float(b_t[i] - a_t[i] @ z_bar) - _support(a_t[i], shape, c)
                point_cont = min(point_cont, value)
                if value < worst_cont[0]:
                    worst_cont = (value, float(t), f"{family}:{hs.labels[i]}")
        if residual > DLMI_TOLERANCE or point_cont < -CONTAINMENT_TOLERANCE or eig <= 0.0:
            offenders.append({"t": float(t), "dlmi": residual, "containment": point_cont, "min_eig_Q": eig})
    if offenders:
        logger.warning("Inter-sample check found %d offending dense points", len(offenders))
    return IntersampleDiagnostics(
        points_per_interval=points_per_interval,
        worst_dlmi_residual=float(worst_dlmi[0]),
        worst_dlmi_time=worst_dlmi[1],
        worst_containment_residual=float(worst_cont[0]) if np.isfinite(worst_cont[0]) else 0.0,
        worst_containment_time=worst_cont[1],
        worst_containment_label=worst_cont[2],
        min_eig_Q=float(min_eig[0]),
        min_eig_Q_time=min_eig[1],
        offenders=offenders,
    )


def project_ellipsoid(Q: np.ndarray, scale: float, pair: Sequence[int]) -> np.ndarray:
    """Shape of the projection of {eta : eta^T Q^{-1} eta <= scale} onto coordinates pair."""
    i, j = pair
    if i == j or min(i, j) < 0 or max(i, j) >= Q.shape[0]:
        raise InvalidArgumentError(f"invalid coordinate pair {tuple(pair)} for dimension {Q.shape[0]}")
    index = np.array([i, j])
    return scale * Q[np.ix_(index, index)]


def project_funnel_2d(funnel: ContinuousFunnel, pair: Sequence[int], t: float) -> np.ndarray:
    """2x2 shape of the funnel {eta : eta^T Q(t)^{-1} eta <= 1/c(t)} projected on pair."""
    return project_ellipsoid(funnel.Q(t), 1.0 / funnel.c(t), pair)


def funnel_metrics(sol: FunnelSolution) -> FunnelMetrics:
    return FunnelMetrics(
        entry_log_volume=funnel_entry_log_volume(sol.Q[0], float(sol.c[0])),
        max_radius=[float(r) for r in max_radius(sol.Q)],
    )
