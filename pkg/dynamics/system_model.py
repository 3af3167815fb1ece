"""
Evaluation, linearization, Lur'e decomposition and Lipschitz estimation.

The difference dynamics of the closed loop around a nominal trajectory are
written as an LTV system in feedback with the residual nonlinearity

    eta' = A eta + B xi + F w + E dp,    ||dp|| <= gamma ||dq||,

where A, B, F are Jacobians of f at the nominal and dp = phi(t, q) - phi(t, q_bar).
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import DegenerateRegionError, InvalidArgumentError, LinearizationError
from models.system import LureLinearization, NonlinearSystem
from models.trajectory import NominalTrajectory

logger = logging.getLogger(__name__)

FD_RELATIVE_STEP = 1e-6
DEFAULT_INFLATION = 1.1
DEFAULT_LIPSCHITZ_SAMPLES = 100

Region = Union[np.ndarray, Sequence[np.ndarray]]


def _vector(value: object, size: int, name: str) -> np.ndarray:
    v = np.asarray(value, dtype=float).reshape(-1)
    if v.shape[0] != size:
        raise InvalidArgumentError(f"{name} must have {size} entries, got {v.shape[0]}")
    return v


def fd_step(x_bar: np.ndarray) -> float:
    """Central-difference step h = max(1e-6, 1e-6 ||x_bar||_inf)."""
    scale = float(np.max(np.abs(x_bar))) if x_bar.size else 0.0
    return max(FD_RELATIVE_STEP, FD_RELATIVE_STEP * scale)


def central_difference(fun: Callable[[np.ndarray], np.ndarray], z: np.ndarray, h: float) -> np.ndarray:
    """Jacobian of fun at z by central differences with step h."""
    columns = []
    for j in range(z.shape[0]):
        dz = np.zeros_like(z)
        dz[j] = h
        columns.append((np.asarray(fun(z + dz), dtype=float) - np.asarray(fun(z - dz), dtype=float)) / (2.0 * h))
    if not columns:
        return np.zeros((np.asarray(fun(z)).shape[0], 0))
    return np.column_stack(columns)


def evaluate_dynamics(sys: NonlinearSystem, t: float, x: object, u: object, w: object) -> np.ndarray:
    """Evaluate f(t, x, u, w).

    Raises:
        InvalidArgumentError: If a vector has the wrong dimension
    """
    x = _vector(x, sys.n_x, "x")
    u = _vector(u, sys.n_u, "u")
    w = _vector(w, sys.n_w, "w")
    return _vector(sys.f(t, x, u, w), sys.n_x, "f(t, x, u, w)")


def linearize(
    sys: NonlinearSystem,
    t: float,
    x_bar: object,
    u_bar: object,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Jacobians (A, B, F) of f at (t, x_bar, u_bar, 0).

    Analytic Jacobians are used when the system provides them, central
    differences otherwise.

    Raises:
        InvalidArgumentError: On dimension mismatch
        LinearizationError: If any Jacobian entry is NaN or Inf
    """
    x_bar = _vector(x_bar, sys.n_x, "x_bar")
    u_bar = _vector(u_bar, sys.n_u, "u_bar")
    w_bar = np.zeros(sys.n_w)
    if sys.jacobian is not None:
        A, B, F = (np.asarray(m, dtype=float) for m in sys.jacobian(t, x_bar, u_bar, w_bar))
    else:
        h = fd_step(x_bar)
        A = central_difference(lambda x: sys.f(t, x, u_bar, w_bar), x_bar, h)
        B = central_difference(lambda u: sys.f(t, x_bar, u, w_bar), u_bar, h)
        F = central_difference(lambda w: sys.f(t, x_bar, u_bar, w), w_bar, h)
    A = A.reshape(sys.n_x, sys.n_x)
    B = B.reshape(sys.n_x, sys.n_u)
    F = F.reshape(sys.n_x, sys.n_w)
    for name, matrix in (("A", A), ("B", B), ("F", F)):
        if not np.all(np.isfinite(matrix)):
            raise LinearizationError(f"non-finite entries in {name} at t={t:g}")
    return A, B, F


def phi_jacobian(sys: NonlinearSystem, t: float, q: object) -> np.ndarray:
    """d phi / d q at (t, q), analytic when available."""
    q = _vector(q, sys.n_q, "q")
    if sys.n_p == 0 or sys.phi is None:
        return np.zeros((sys.n_p, sys.n_q))
    if sys.phi_jacobian is not None:
        J = np.asarray(sys.phi_jacobian(t, q), dtype=float)
    else:
        phi = sys.phi
        J = central_difference(lambda z: phi(t, z), q, fd_step(q))
    J = J.reshape(sys.n_p, sys.n_q)
    if not np.all(np.isfinite(J)):
        raise LinearizationError(f"non-finite entries in d phi / d q at t={t:g}")
    return J


def nominal_argument(sys: NonlinearSystem, x_bar: np.ndarray, u_bar: np.ndarray) -> np.ndarray:
    """q_bar = C x_bar + D u_bar (the nominal disturbance is zero)."""
    return sys.C @ x_bar + sys.D @ u_bar


def lure_decompose(sys: NonlinearSystem, nominal_q: Callable[[float], np.ndarray]) -> NonlinearSystem:
    """Lur'e residual system around a nominal trajectory.

    Given a system whose f - E phi(t, Cx + Du + Gw) is linear in (x, u, w),
    returns the same system with phi replaced by

        phi_res(t, q) = phi(t, q) - J(t) q,   J(t) = d phi / d q at q_bar(t),

    so that f = A(t) x + B(t) u + F(t) w + E phi_res(t, q) with A, B, F the
    Jacobians of f along the nominal. The Lipschitz constant of phi_res only
    measures the part of the nonlinearity the linearization misses.

    Args:
        sys: System with the raw lumped nonlinearity
        nominal_q: t -> q_bar(t) along the nominal trajectory
    """
    if sys.is_linear or sys.phi is None:
        return sys
    raw_phi = sys.phi

    def residual(t: float, q: np.ndarray) -> np.ndarray:
        J = phi_jacobian(sys, t, nominal_q(t))
        return np.asarray(raw_phi(t, q), dtype=float) - J @ q

    def residual_jacobian(t: float, q: np.ndarray) -> np.ndarray:
        return phi_jacobian(sys, t, q) - phi_jacobian(sys, t, nominal_q(t))

    data = {key: getattr(sys, key) for key in sys.__fields__}
    data.update(phi=residual, phi_jacobian=residual_jacobian, name=f"{sys.name}:lure")
    return NonlinearSystem(**data)


def nonlinearity_residual(
    sys: NonlinearSystem, t: float, x: object, u: object, w: object
) -> Tuple[np.ndarray, np.ndarray]:
    """Return (p, q) with q = Cx + Du + Gw and p = phi(t, q)."""
    x = _vector(x, sys.n_x, "x")
    u = _vector(u, sys.n_u, "u")
    w = _vector(w, sys.n_w, "w")
    q = sys.C @ x + sys.D @ u + sys.G @ w
    if sys.n_p == 0 or sys.phi is None:
        return np.zeros(0), q
    return _vector(sys.phi(t, q), sys.n_p, "phi(t, q)"), q


def reconstruction_residual(
    sys: NonlinearSystem,
    t: float,
    x: object,
    u: object,
    w: object,
    A: np.ndarray,
    B: np.ndarray,
    F: np.ndarray,
) -> np.ndarray:
    """f(t,x,u,w) - (A x + B u + F w + E phi(t, q)); zero for an exact Lur'e split."""
    x = _vector(x, sys.n_x, "x")
    u = _vector(u, sys.n_u, "u")
    w = _vector(w, sys.n_w, "w")
    p, _ = nonlinearity_residual(sys, t, x, u, w)
    return evaluate_dynamics(sys, t, x, u, w) - (A @ x + B @ u + F @ w + sys.E @ p)


def _uniform_ball(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """count points uniformly distributed in the unit ball of R^n."""
    directions = rng.standard_normal((count, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / n)
    return directions * radii


def _region_factor(region: np.ndarray, k: int) -> np.ndarray:
    region = 0.5 * (region + region.T)
    eigenvalues = np.linalg.eigvalsh(region)
    if eigenvalues[-1] <= 0.0 or eigenvalues[0] <= 1e-14 * max(eigenvalues[-1], 1.0):
        raise DegenerateRegionError(f"Lipschitz sampling region at node {k} has zero radius")
    return np.linalg.cholesky(region)


def estimate_lipschitz(
    sys: NonlinearSystem,
    traj: NominalTrajectory,
    region: Region,
    n_samples: int = DEFAULT_LIPSCHITZ_SAMPLES,
    inflation: float = DEFAULT_INFLATION,
    seed: int = 0,
    K_guess: Optional[Sequence[np.ndarray]] = None,
    prior: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Sampled local Lipschitz constants of phi along the trajectory.

    At every node k, n_samples deviations eta are drawn uniformly inside the
    region ellipsoid {eta : eta^T R_k^{-1} eta <= 1} and disturbances
    uniformly inside the unit ball; the argument deviation is
    dq = (C + D K_guess) eta + G w and

        gamma_k = inflation * max ||phi(t_k, q_bar + dq) - phi(t_k, q_bar)|| / ||dq||.

    Args:
        sys: System whose phi is the lumped (Lur'e residual) nonlinearity
        traj: Nominal trajectory
        region: One SPD matrix R or one per node
        n_samples: Samples per node (>= 2)
        inflation: Factor >= 1 compensating the sampling underestimate
        seed: Seed of the sample generator
        K_guess: Optional per-node feedback guess (defaults to zero)
        prior: Previously estimated constants; the result never falls below them

    Returns:
        gamma_k per node, shape (N+1,)

    Raises:
        InvalidArgumentError: If n_samples < 2 or inflation < 1
        DegenerateRegionError: If a region ellipsoid has zero radius
    """
    if n_samples < 2:
        raise InvalidArgumentError("n_samples must be at least 2")
    if inflation < 1.0:
        raise InvalidArgumentError("inflation must be >= 1")
    n_nodes = traj.N + 1
    regions: List[np.ndarray]
    region_array = np.asarray(region, dtype=float) if not isinstance(region, (list, tuple)) else None
    if region_array is not None and region_array.ndim == 2:
        regions = [region_array] * n_nodes
    else:
        regions = [np.asarray(r, dtype=float) for r in region]
        if len(regions) != n_nodes:
            raise InvalidArgumentError(f"expected {n_nodes} region matrices, got {len(regions)}")

    gamma = np.zeros(n_nodes)
    if sys.n_p == 0 or sys.phi is None:
        return gamma if prior is None else np.maximum(gamma, prior)

    rng = np.random.default_rng(seed)
    times = traj.times
    for k in range(n_nodes):
        L = _region_factor(regions[k], k)
        K = np.zeros((sys.n_u, sys.n_x)) if K_guess is None else np.asarray(K_guess[k], dtype=float)
        eta = _uniform_ball(rng, sys.n_x, n_samples) @ L.T
        w = _uniform_ball(rng, sys.n_w, n_samples)
        dq = eta @ (sys.C + sys.D @ K).T + w @ sys.G.T
        q_bar = nominal_argument(sys, traj.x[k], traj.u[k])
        p_bar = np.asarray(sys.phi(times[k], q_bar), dtype=float)
        best = 0.0
        for i in range(n_samples):
            norm_dq = float(np.linalg.norm(dq[i]))
            if norm_dq < 1e-14:
                continue
            dp = np.asarray(sys.phi(times[k], q_bar + dq[i]), dtype=float) - p_bar
            best = max(best, float(np.linalg.norm(dp)) / norm_dq)
        gamma[k] = inflation * best
    logger.debug("Lipschitz estimates: min %.3e max %.3e", gamma.min(), gamma.max())
    if prior is not None:
        gamma = np.maximum(gamma, np.asarray(prior, dtype=float))
    return gamma


def linearize_trajectory(
    sys: NonlinearSystem,
    traj: NominalTrajectory,
    gamma: Optional[np.ndarray] = None,
) -> LureLinearization:
    """Node-wise (A_k, B_k, F_k) along the nominal, paired with gamma_k."""
    times = traj.times
    jacobians = [linearize(sys, times[k], traj.x[k], traj.u[k]) for k in range(traj.N + 1)]
    return LureLinearization(
        times=times,
        A=np.stack([j[0] for j in jacobians]),
        B=np.stack([j[1] for j in jacobians]),
        F=np.stack([j[2] for j in jacobians]),
        gamma=np.zeros(traj.N + 1) if gamma is None else gamma,
    )
