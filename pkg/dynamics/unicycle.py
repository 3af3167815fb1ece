"""
Unicycle with additive position disturbances.

    r_x' = u_v cos(theta) + 0.1 w_1
    r_y' = u_v sin(theta) + 0.1 w_2
    theta' = u_theta

The nonlinearity acts on q = (theta, u_v) and enters the position rates:
phi(q) = (u_v cos(theta), u_v sin(theta)), so that f - E phi is linear.
"""

from typing import Tuple

import numpy as np

from models.system import NonlinearSystem
from models.trajectory import InputSchedule

DISTURBANCE_GAIN = 0.1

E = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
C = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
D = np.array([[0.0, 0.0], [1.0, 0.0]])
G = np.zeros((2, 2))


def unicycle_rhs(t: float, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    theta = x[2]
    u_v, u_theta = u
    return np.array([
        u_v * np.cos(theta) + DISTURBANCE_GAIN * w[0],
        u_v * np.sin(theta) + DISTURBANCE_GAIN * w[1],
        u_theta,
    ])


def unicycle_jacobian(
    t: float, x: np.ndarray, u: np.ndarray, w: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    theta = x[2]
    u_v = u[0]
    c, s = np.cos(theta), np.sin(theta)
    A = np.array([
        [0.0, 0.0, -u_v * s],
        [0.0, 0.0, u_v * c],
        [0.0, 0.0, 0.0],
    ])
    B = np.array([
        [c, 0.0],
        [s, 0.0],
        [0.0, 1.0],
    ])
    F = DISTURBANCE_GAIN * np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    return A, B, F


def unicycle_phi(t: float, q: np.ndarray) -> np.ndarray:
    theta, u_v = q
    return np.array([u_v * np.cos(theta), u_v * np.sin(theta)])


def unicycle_phi_jacobian(t: float, q: np.ndarray) -> np.ndarray:
    theta, u_v = q
    c, s = np.cos(theta), np.sin(theta)
    return np.array([
        [-u_v * s, c],
        [u_v * c, s],
    ])


def make_unicycle() -> NonlinearSystem:
    """Build the unicycle system with analytic Jacobians."""
    return NonlinearSystem(
        name="unicycle",
        n_x=3, n_u=2, n_w=2, n_p=2, n_q=2,
        f=unicycle_rhs,
        phi=unicycle_phi,
        E=E, C=C, D=D, G=G,
        jacobian=unicycle_jacobian,
        phi_jacobian=unicycle_phi_jacobian,
    )


def benchmark_inputs(t_0: float = 0.0, t_f: float = 5.0, knots: int = 11) -> InputSchedule:
    """Scripted benchmark schedule: u_v = 1, u_theta = 0.5 cos(pi (t - t_0) / (t_f - t_0)).

    The heading swings left and back so that the path arcs between the two
    benchmark obstacles.
    """
    times = np.linspace(t_0, t_f, knots)
    phase = np.pi * (times - t_0) / (t_f - t_0)
    values = np.column_stack([np.ones(knots), 0.5 * np.cos(phase)])
    return InputSchedule(times=times, values=values)
