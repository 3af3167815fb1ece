"""Shared fixtures for the test suite: a linear double integrator and a hand-made solution."""

import numpy as np

from models.problem import EllipsoidalObstacle
from models.solution import FunnelSolution
from models.system import NonlinearSystem
from models.trajectory import InputSchedule
from synthesis.pipeline import FunnelSetup

DISTURBANCE_GAIN = 0.1


def double_integrator_rhs(t: float, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.array([x[1], u[0] + DISTURBANCE_GAIN * w[0]])


def make_double_integrator() -> NonlinearSystem:
    """Linear system (n_p = n_q = 0); Jacobians come from finite differences."""
    return NonlinearSystem(
        name="double_integrator",
        n_x=2, n_u=1, n_w=1, n_p=0, n_q=0,
        f=double_integrator_rhs,
        E=np.zeros((2, 0)), C=np.zeros((0, 2)), D=np.zeros((0, 1)), G=np.zeros((0, 1)),
    )


def rest_inputs(t_0: float = 0.0, t_f: float = 2.0) -> InputSchedule:
    return InputSchedule.constant([0.0], t_0, t_f)


def double_integrator_setup(obstacle_center: float = 3.0, final_scale: float = 4.0, q_min: float = 0.0) -> FunnelSetup:
    """Unit entry ellipsoid, exit ellipsoid final_scale * I, |u| <= 5 and a disc obstacle on the x1 axis."""
    return FunnelSetup(
        alpha=0.5,
        lambda_w=0.5,
        w_c=10.0,
        w_Q0=0.1,
        w_Qbar=0.1,
        Q_i=np.eye(2),
        Q_f=final_scale * np.eye(2),
        obstacles=[EllipsoidalObstacle(center=[obstacle_center, 0.0], shape=np.eye(2), label="wall")],
        input_lower=[-5.0],
        input_upper=[5.0],
        q_min=q_min,
    )


def tiny_solution(c, Q=None, Y=None, alpha=1.0, t_f=1.0) -> FunnelSolution:
    """Hand-made solution on [0, t_f], one node per entry of c."""
    n = len(c)
    Q = np.array([np.eye(2)] * n) if Q is None else np.asarray(Q)
    Y = np.zeros((n, 1, 2)) if Y is None else np.asarray(Y)
    return FunnelSolution(
        t_0=0.0, t_f=t_f, Q=Q, Y=Y, K=np.zeros((n, 1, 2)), c=c, nu=np.ones(n), vQ=np.ones(n),
        Z=np.zeros((n, 3, 3)), gamma=np.zeros(n), alpha=alpha, lambda_w=1.0,
        x_bar=np.zeros((n, 2)), u_bar=np.zeros((n, 1)),
    )
