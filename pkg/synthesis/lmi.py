"""
Matrix inequalities and cost terms of the funnel synthesis problem.

The builders accept plain numpy arrays or cvxpy expressions for the decision
variables. With numeric inputs they return numpy matrices (used by the
validation checks); with cvxpy variables they return expressions that the
program assembler turns into cone constraints.
"""

import logging
from typing import Any, List, Optional, Sequence, Tuple

import cvxpy as cp
import numpy as np

from errors import InfeasibleNominalError, InvalidArgumentError
from models.problem import EllipsoidalObstacle, FunnelProblem, HalfspaceSet
from models.trajectory import NominalTrajectory

logger = logging.getLogger(__name__)

GAMMA_MIN = 1e-9

Operand = Any  # numpy array, float or cvxpy expression


def _is_expression(value: Operand) -> bool:
    return isinstance(value, cp.Expression)


def _bmat(blocks: List[List[Operand]]) -> Operand:
    if any(_is_expression(block) for row in blocks for block in row):
        return cp.bmat(blocks)
    return np.block([[np.atleast_2d(np.asarray(block, dtype=float)) for block in row] for row in blocks])


def _sym(M: Operand) -> Operand:
    return (M + M.T) / 2


def _eye(n: int) -> np.ndarray:
    return np.eye(n)


def build_H(
    Q: Operand,
    Qdot: Operand,
    Y: Operand,
    nu: Operand,
    gamma: float,
    alpha: float,
    lambda_w: float,
    A: np.ndarray,
    B: np.ndarray,
    F: np.ndarray,
    E: np.ndarray,
    C: np.ndarray,
    D: np.ndarray,
    G: np.ndarray,
) -> Operand:
    """Block matrix H of the differential LMI, ordered (eta, p, w, q).

        H = [[M - Qdot, nu E,   F,            (CQ + DY)^T ],
             [nu E^T,  -nu I,   0,            0           ],
             [F^T,      0,     -lambda_w I,   G^T         ],
             [CQ + DY,  0,      G,           -nu/gamma^2 I]]

    with M = Q A^T + Y^T B^T + A Q + B Y + (alpha + lambda_w) Q. For a linear
    system (no p, q blocks) only the eta and w rows remain and gamma is
    ignored. The result is symmetrized.

    Raises:
        InvalidArgumentError: If gamma < 1e-9 while the system has a nonlinearity
    """
    n_x, n_w = F.shape
    n_p = E.shape[1] if E.ndim == 2 else 0
    n_q = C.shape[0] if C.ndim == 2 else 0
    M = Q @ A.T + Y.T @ B.T + A @ Q + B @ Y + (alpha + lambda_w) * Q
    if n_p == 0 and n_q == 0:
        H = _bmat([
            [M - Qdot, F],
            [F.T, -lambda_w * _eye(n_w)],
        ])
        return _sym(H)
    if gamma < GAMMA_MIN:
        raise InvalidArgumentError(
            f"gamma={gamma:g} is below {GAMMA_MIN:g}; a system without nonlinearity "
            "should be declared with n_p = n_q = 0"
        )
    CQDY = C @ Q + D @ Y
    H = _bmat([
        [M - Qdot, nu * E, F, CQDY.T],
        [nu * E.T, -nu * _eye(n_p), np.zeros((n_p, n_w)), np.zeros((n_p, n_q))],
        [F.T, np.zeros((n_w, n_p)), -lambda_w * _eye(n_w), G.T],
        [CQDY, np.zeros((n_q, n_p)), G, -(nu / gamma ** 2) * _eye(n_q)],
    ])
    return _sym(H)


def lyapunov_rate(Q: np.ndarray, Y: np.ndarray, A: np.ndarray, B: np.ndarray, alpha: float, lambda_w: float) -> np.ndarray:
    """M = Q A^T + Y^T B^T + A Q + B Y + (alpha + lambda_w) Q."""
    return Q @ A.T + Y.T @ B.T + A @ Q + B @ Y + (alpha + lambda_w) * Q


def _margin(a: np.ndarray, b: float, z_bar: np.ndarray, node: Optional[int], constraint: Optional[int], label: str) -> float:
    margin = float(b - np.dot(a, z_bar))
    if margin <= 0.0:
        raise InfeasibleNominalError(node, constraint, margin, label)
    return margin


def build_state_containment_lmi(
    Q: Operand,
    c: Operand,
    x_bar: np.ndarray,
    a: np.ndarray,
    b: float,
    node: Optional[int] = None,
    constraint: Optional[int] = None,
    label: str = "",
) -> Operand:
    """[[margin^2 c, a^T Q], [Q a, Q]] with margin = b - a^T x_bar; required PSD.

    Raises:
        InfeasibleNominalError: If the nominal state does not strictly satisfy the halfspace
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    margin = _margin(a, b, np.asarray(x_bar, dtype=float), node, constraint, label)
    a_col = a.reshape(-1, 1)
    return _sym(_bmat([
        [margin ** 2 * c * np.ones((1, 1)), a_col.T @ Q],
        [Q @ a_col, Q],
    ]))


def build_input_containment_lmi(
    Q: Operand,
    Y: Operand,
    c: Operand,
    u_bar: np.ndarray,
    a: np.ndarray,
    b: float,
    node: Optional[int] = None,
    constraint: Optional[int] = None,
    label: str = "",
) -> Operand:
    """[[margin^2 c, a^T Y], [Y^T a, Q]] with margin = b - a^T u_bar; required PSD.

    Raises:
        InfeasibleNominalError: If the nominal input does not strictly satisfy the halfspace
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    margin = _margin(a, b, np.asarray(u_bar, dtype=float), node, constraint, label)
    a_col = a.reshape(-1, 1)
    return _sym(_bmat([
        [margin ** 2 * c * np.ones((1, 1)), a_col.T @ Y],
        [Y.T @ a_col, Q],
    ]))


def c_condition_rows(
    alpha: float, times: np.ndarray, epsilon: float = 1e-9, include_lower: bool = True
) -> Tuple[np.ndarray, np.ndarray]:
    """Rows (G_c, h_c) of the linear system G_c c <= h_c on c = (c_0..c_N).

    Per node: -c_k <= -epsilon (unless include_lower is False) and c_k <= 1;
    for k >= 1 additionally exp(-alpha (t_k - t_0)) c_k - c_0 <= 0 (the k = 0
    instance is vacuous).
    """
    if alpha <= 0:
        raise InvalidArgumentError("alpha must be positive")
    n = times.shape[0]
    rows: List[np.ndarray] = []
    rhs: List[float] = []
    for k in range(n):
        if include_lower:
            lower = np.zeros(n)
            lower[k] = -1.0
            rows.append(lower)
            rhs.append(-epsilon)
        upper = np.zeros(n)
        upper[k] = 1.0
        rows.append(upper)
        rhs.append(1.0)
    for k in range(1, n):
        decay = np.zeros(n)
        decay[k] = np.exp(-alpha * (times[k] - times[0]))
        decay[0] = -1.0
        rows.append(decay)
        rhs.append(0.0)
    return np.array(rows), np.array(rhs)


def build_c_condition(c: cp.Expression, alpha: float, times: np.ndarray, epsilon: float = 1e-9) -> List[cp.Constraint]:
    G_c, h_c = c_condition_rows(alpha, times, epsilon)
    return [G_c @ c <= h_c]


def logdet_epigraph(Q: cp.Expression) -> Tuple[cp.Expression, List[cp.Constraint]]:
    """Hypograph of log det Q in conic form.

    With L lower triangular, [[Q, L], [L^T, diag(diag(L))]] PSD and
    t_i <= log L_ii (exponential cones), sum(t) <= log det Q, tight at the
    optimum.

    Returns:
        (sum of t, constraints)
    """
    n = Q.shape[0]
    L = cp.Variable((n, n), name="logdet_L")
    t = cp.Variable(n, name="logdet_t")
    block = cp.bmat([[Q, L], [L.T, cp.diag(cp.diag(L))]])
    constraints: List[cp.Constraint] = [_sym(block) >> 0, cp.ExpCone(t, np.ones(n), cp.diag(L))]
    if n > 1:
        constraints.append(cp.upper_tri(L) == 0)
    return cp.sum(t), constraints


def build_objective(
    Q: Sequence[cp.Expression],
    c_0: cp.Expression,
    vQ: cp.Expression,
    problem: FunnelProblem,
    t_0: float,
    t_f: float,
) -> Tuple[cp.Expression, List[cp.Constraint]]:
    """w_c c_0 - w_Q0 log det Q_0 + w_Q sum_k vQ_k, with Q_k <= vQ_k I.

    Returns:
        (objective expression, epigraph constraints)
    """
    n_x = problem.n_x
    log_det, constraints = logdet_epigraph(Q[0])
    for k, Q_k in enumerate(Q):
        constraints.append(vQ[k] * np.eye(n_x) - Q_k >> 0)
    w_Q = problem.running_weight(t_0, t_f)
    objective = problem.w_c * c_0 - problem.w_Q0 * log_det + w_Q * cp.sum(vQ)
    return objective, constraints


def objective_value(Q_0: np.ndarray, c_0: float, vQ: np.ndarray, problem: FunnelProblem, t_0: float, t_f: float) -> float:
    """Numeric value of the objective for given node values."""
    _, log_det = np.linalg.slogdet(Q_0)
    return float(problem.w_c * c_0 - problem.w_Q0 * log_det + problem.running_weight(t_0, t_f) * np.sum(vQ))


def linearize_obstacle(obstacle: EllipsoidalObstacle, x_bar: np.ndarray) -> Tuple[np.ndarray, float]:
    """Tangent halfspace a^T x <= b separating the nominal from an obstacle.

    The nominal point is projected radially onto the obstacle boundary
    ||S (p - o)|| = 1 and the tangent plane there is returned with a unit
    normal pointing into the obstacle. Since the obstacle is convex, the
    halfspace never intersects it.

    Raises:
        InfeasibleNominalError: If the nominal lies inside or on the obstacle
    """
    x_bar = np.asarray(x_bar, dtype=float)
    P = obstacle.selector(x_bar.shape[0])
    S = obstacle.shape
    d = P @ x_bar - obstacle.center
    rho = float(np.linalg.norm(S @ d))
    if rho <= 1.0:
        raise InfeasibleNominalError(None, None, rho - 1.0, obstacle.label)
    n = S.T @ S @ d / rho
    scale = float(np.linalg.norm(n))
    a = -(P.T @ n) / scale
    b = -(float(n @ obstacle.center) + 1.0) / scale
    return a, b


def build_halfspaces(
    obstacles: Sequence[EllipsoidalObstacle],
    input_lower: Optional[Sequence[float]],
    input_upper: Optional[Sequence[float]],
    traj: NominalTrajectory,
) -> Tuple[HalfspaceSet, HalfspaceSet]:
    """Per-node state halfspaces (one per obstacle) and constant input bounds.

    Infinite input bounds produce no halfspace.
    """
    n_nodes = traj.N + 1
    if obstacles:
        a_x = np.zeros((n_nodes, len(obstacles), traj.n_x))
        b_x = np.zeros((n_nodes, len(obstacles)))
        for k in range(n_nodes):
            for i, obstacle in enumerate(obstacles):
                try:
                    a_x[k, i], b_x[k, i] = linearize_obstacle(obstacle, traj.x[k])
                except InfeasibleNominalError as exc:
                    raise InfeasibleNominalError(k, i, exc.margin, obstacle.label) from None
        state = HalfspaceSet(a=a_x, b=b_x, labels=[o.label for o in obstacles])
    else:
        state = HalfspaceSet.empty(n_nodes, traj.n_x)

    normals: List[np.ndarray] = []
    offsets: List[float] = []
    labels: List[str] = []
    bounds = (
        ("<=", input_upper, 1.0),
        (">=", input_lower, -1.0),
    )
    for j in range(traj.n_u):
        for relation, values, sign in bounds:
            if values is None or not np.isfinite(values[j]):
                continue
            e = np.zeros(traj.n_u)
            e[j] = sign
            normals.append(e)
            offsets.append(sign * float(values[j]))
            labels.append(f"u[{j}] {relation} {float(values[j]):g}")
    if normals:
        inputs = HalfspaceSet(
            a=np.tile(np.array(normals)[None], (n_nodes, 1, 1)),
            b=np.tile(np.array(offsets)[None], (n_nodes, 1)),
            labels=labels,
        )
    else:
        inputs = HalfspaceSet.empty(n_nodes, traj.n_u)
    logger.debug("Built %d state and %d input halfspaces per node", state.m, inputs.m)
    return state, inputs


def funnel_entry_log_volume(Q_0: np.ndarray, c_0: float) -> float:
    """log det(Q_0 / c_0) = log det Q_0 - n_x log c_0."""
    _, log_det = np.linalg.slogdet(Q_0)
    return float(log_det - Q_0.shape[0] * np.log(c_0))


def max_radius(Q: np.ndarray) -> np.ndarray:
    """sqrt(lambda_max(Q_k)) for a stack of node matrices."""
    return np.array([np.sqrt(max(np.linalg.eigvalsh(0.5 * (Q_k + Q_k.T))[-1], 0.0)) for Q_k in Q])
