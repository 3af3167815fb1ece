"""
Nominal trajectory generation, resampling and dense evaluation.

Every interval is integrated separately from its left node with the inputs
held first-order between the node samples, so a trajectory built here is
dynamically consistent on its own grid.
"""

import logging
from typing import Callable, List, Optional

import numpy as np
from scipy.integrate import solve_ivp

from errors import IntegrationError, InvalidArgumentError
from models.system import NonlinearSystem
from models.trajectory import InputSchedule, NominalTrajectory, uniform_grid

logger = logging.getLogger(__name__)

RTOL = 1e-10
ATOL = 1e-12
DEFECT_TOLERANCE = 1e-6
METHOD = "DOP853"


def _integrate_interval(
    sys: NonlinearSystem,
    x_k: np.ndarray,
    t_k: float,
    t_k1: float,
    input_fn: Callable[[float], np.ndarray],
    interval: int,
    dense: bool = False,
) -> object:
    zero_w = np.zeros(sys.n_w)

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        return np.asarray(sys.f(t, x, input_fn(t), zero_w), dtype=float)

    result = solve_ivp(
        rhs, (t_k, t_k1), x_k, method=METHOD, rtol=RTOL, atol=ATOL, dense_output=dense
    )
    if not result.success or not np.all(np.isfinite(result.y[:, -1])):
        raise IntegrationError(
            f"nominal integration failed on interval {interval} [{t_k:g}, {t_k1:g}]: {result.message}",
            interval=interval,
        )
    return result


def _foh_input(times: np.ndarray, u: np.ndarray, k: int) -> Callable[[float], np.ndarray]:
    t_k, t_k1 = times[k], times[k + 1]

    def input_fn(t: float) -> np.ndarray:
        lam_p = min(max((t - t_k) / (t_k1 - t_k), 0.0), 1.0)
        return (1.0 - lam_p) * u[k] + lam_p * u[k + 1]

    return input_fn


def integrate_nominal(
    sys: NonlinearSystem,
    x_0: object,
    u_profile: Callable[[float], np.ndarray],
    t_0: float,
    t_f: float,
    N: int,
) -> NominalTrajectory:
    """Integrate the zero-disturbance dynamics onto a uniform grid.

    The input profile is sampled at the nodes; between nodes the samples are
    interpolated linearly, which is the hold the rest of the pipeline uses.

    Args:
        sys: System to integrate
        x_0: Initial state
        u_profile: Callable t -> u (an InputSchedule for scripted runs)
        t_0: Initial time
        t_f: Final time
        N: Number of intervals (>= 1)

    Returns:
        The nominal trajectory on the grid t_k = t_0 + (k/N)(t_f - t_0)

    Raises:
        InvalidArgumentError: For a bad grid or wrong initial state size
        IntegrationError: If the integrator fails on an interval
    """
    if N < 1 or t_f <= t_0:
        raise InvalidArgumentError(f"invalid grid: N={N}, t_0={t_0}, t_f={t_f}")
    x = np.asarray(x_0, dtype=float).reshape(-1)
    if x.shape[0] != sys.n_x:
        raise InvalidArgumentError(f"x_0 must have {sys.n_x} entries")
    times = uniform_grid(t_0, t_f, N)
    u = np.array([np.asarray(u_profile(t), dtype=float).reshape(-1) for t in times])
    if u.shape[1] != sys.n_u:
        raise InvalidArgumentError(f"input profile must return {sys.n_u} entries")
    states = [x]
    for k in range(N):
        result = _integrate_interval(sys, states[-1], times[k], times[k + 1], _foh_input(times, u, k), k)
        states.append(result.y[:, -1])
    logger.info("Integrated nominal %s over [%g, %g] with N=%d", sys.name, t_0, t_f, N)
    return NominalTrajectory(t_0=t_0, t_f=t_f, x=np.array(states), u=u)


def resample(sys: NonlinearSystem, traj: NominalTrajectory, N_new: int) -> NominalTrajectory:
    """Re-integrate a trajectory on a grid with N_new intervals.

    The input profile of the old trajectory is kept; the states are
    recomputed, not interpolated.
    """
    if N_new < 2:
        raise InvalidArgumentError("N_new must be at least 2")
    schedule = InputSchedule(times=traj.times, values=traj.u)
    return integrate_nominal(sys, traj.x[0], schedule, traj.t_0, traj.t_f, N_new)


def trajectory_defects(sys: NonlinearSystem, traj: NominalTrajectory) -> np.ndarray:
    """Relative defects ||Phi(x_k) - x_{k+1}|| / max(1, ||x_{k+1}||) per interval."""
    times = traj.times
    defects = np.zeros(traj.N)
    for k in range(traj.N):
        result = _integrate_interval(sys, traj.x[k], times[k], times[k + 1], _foh_input(times, traj.u, k), k)
        scale = max(1.0, float(np.linalg.norm(traj.x[k + 1])))
        defects[k] = float(np.linalg.norm(result.y[:, -1] - traj.x[k + 1])) / scale
    return defects


def check_defects(sys: NonlinearSystem, traj: NominalTrajectory, tol: float = DEFECT_TOLERANCE) -> List[int]:
    """Intervals whose defect exceeds tol; each one is logged as a warning."""
    defects = trajectory_defects(sys, traj)
    bad = [int(k) for k in np.flatnonzero(defects > tol)]
    for k in bad:
        logger.warning("Nominal defect %.2e on interval %d exceeds %.1e", defects[k], k, tol)
    return bad


class DenseNominal:
    """Continuous evaluation of a nominal trajectory.

    Each interval keeps the dense output of the flow started at its left
    node; inputs follow the first-order hold of the node samples.

    Example:
        dense = dense_nominal(system, traj)
        x_mid, u_mid = dense.state(2.5), dense.input(2.5)
    """

    def __init__(self, sys: NonlinearSystem, traj: NominalTrajectory):
        self.system = sys
        self.trajectory = traj
        self._times = traj.times
        self._segments = []
        for k in range(traj.N):
            result = _integrate_interval(
                sys, traj.x[k], self._times[k], self._times[k + 1],
                _foh_input(self._times, traj.u, k), k, dense=True,
            )
            self._segments.append(result.sol)

    def state(self, t: float, interval: Optional[int] = None) -> np.ndarray:
        """Nominal state at t; interval selects the segment at shared node times."""
        k = self.trajectory.interval_of(t) if interval is None else interval
        t_k = self._times[k]
        if t == t_k:
            return self.trajectory.x[k].copy()
        return np.asarray(self._segments[k](t), dtype=float)

    def input(self, t: float) -> np.ndarray:
        return self.trajectory.input_at(t)

    def argument(self, t: float) -> np.ndarray:
        """Nominal nonlinearity argument q_bar(t) = C x_bar(t) + D u_bar(t)."""
        return self.system.C @ self.state(t) + self.system.D @ self.input(t)


def dense_nominal(sys: NonlinearSystem, traj: NominalTrajectory) -> DenseNominal:
    return DenseNominal(sys, traj)
