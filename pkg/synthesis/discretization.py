"""
Multiple-shooting discretization of the Lyapunov matrix ODE.

Between nodes the matrix variable obeys

    Q' = Q A^T + Y^T B^T + A Q + B Y + (alpha + lambda_w) Q + Z11,

which in column-major vec form reads q' = A_q(t) q + B_q(t) y + S_q z with

    A_q = I (x) A + A (x) I + (alpha + lambda_w) I,
    B_q = I (x) B + (B (x) I) K^c,     S_q = I.

With y and z held first-order between nodes the interval map is

    q_{k+1} = A^q_k q_k + B^-_k y_k + B^+_k y_{k+1} + S^-_k z_k + S^+_k z_{k+1},

and its matrices are obtained by integrating the forward sensitivity
equations over the interval with the true time-varying A(t), B(t).
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from dynamics.nominal import DenseNominal
from dynamics.system_model import linearize
from errors import DiscretizationError
from models.system import NonlinearSystem

logger = logging.getLogger(__name__)

RTOL = 1e-10
ATOL = 1e-12
MIN_SUBSTEPS = 10

MatrixFunction = Callable[[float], np.ndarray]


def commutation_matrix(n_u: int, n_x: int) -> np.ndarray:
    """K^c with K^c vec(N) = vec(N^T) for every n_u x n_x matrix N."""
    K = np.zeros((n_u * n_x, n_u * n_x))
    for i in range(n_u):
        for j in range(n_x):
            K[j + i * n_x, i + j * n_u] = 1.0
    return K


@dataclass
class VectorizedOde:
    """Coefficients of the vectorized Lyapunov ODE on one interval."""

    A: MatrixFunction
    B: MatrixFunction
    alpha: float
    lambda_w: float
    n_x: int
    n_u: int
    K_c: np.ndarray

    def A_q(self, t: float) -> np.ndarray:
        A = self.A(t)
        eye = np.eye(self.n_x)
        return np.kron(eye, A) + np.kron(A, eye) + (self.alpha + self.lambda_w) * np.eye(self.n_x ** 2)

    def B_q(self, t: float) -> np.ndarray:
        B = self.B(t)
        eye = np.eye(self.n_x)
        return np.kron(eye, B) + np.kron(B, eye) @ self.K_c

    @property
    def S_q(self) -> np.ndarray:
        return np.eye(self.n_x ** 2)


def build_vectorized_ode(
    A: MatrixFunction,
    B: MatrixFunction,
    alpha: float,
    lambda_w: float,
    n_x: Optional[int] = None,
    n_u: Optional[int] = None,
) -> VectorizedOde:
    """Wrap A(t), B(t) into the vectorized ODE coefficients.

    Dimensions are read from B(0) when not given.
    """
    if n_x is None or n_u is None:
        B_0 = np.atleast_2d(B(0.0))
        n_x, n_u = B_0.shape
    return VectorizedOde(A=A, B=B, alpha=alpha, lambda_w=lambda_w, n_x=n_x, n_u=n_u, K_c=commutation_matrix(n_u, n_x))


@dataclass
class DiscreteTransition:
    """FOH transition matrices of one interval [t_k, t_{k+1}]."""

    interval: int
    t_k: float
    t_k1: float
    A_q: np.ndarray
    B_minus: np.ndarray
    B_plus: np.ndarray
    S_minus: np.ndarray
    S_plus: np.ndarray

    def propagate(
        self,
        q_k: np.ndarray,
        y_k: np.ndarray,
        y_k1: np.ndarray,
        z_k: np.ndarray,
        z_k1: np.ndarray,
    ) -> np.ndarray:
        """vec Q_{k+1} predicted from the node values of the interval."""
        return (
            self.A_q @ q_k + self.B_minus @ y_k + self.B_plus @ y_k1
            + self.S_minus @ z_k + self.S_plus @ z_k1
        )


def foh_discretize(ode: VectorizedOde, t_k: float, t_k1: float, interval: int = 0) -> DiscreteTransition:
    """Integrate the sensitivity ODEs of the vectorized flow over one interval.

    Phi' = A_q Phi, X' = A_q X + B_q lambda(t) for the y channels and
    S' = A_q S + lambda(t) I for the z channels, all from zero except Phi(t_k) = I.

    Raises:
        DiscretizationError: If t_k >= t_k1 or the integrator fails
    """
    if t_k1 <= t_k:
        raise DiscretizationError(f"empty interval [{t_k:g}, {t_k1:g}]", interval=interval)
    n_q = ode.n_x ** 2
    n_y = ode.n_x * ode.n_u
    h = t_k1 - t_k
    sizes = [n_q * n_q, n_q * n_y, n_q * n_y, n_q * n_q, n_q * n_q]
    offsets = np.cumsum([0] + sizes)
    eye = np.eye(n_q)

    def unpack(z: np.ndarray) -> Tuple[np.ndarray, ...]:
        Phi = z[offsets[0]:offsets[1]].reshape(n_q, n_q)
        Bm = z[offsets[1]:offsets[2]].reshape(n_q, n_y)
        Bp = z[offsets[2]:offsets[3]].reshape(n_q, n_y)
        Sm = z[offsets[3]:offsets[4]].reshape(n_q, n_q)
        Sp = z[offsets[4]:offsets[5]].reshape(n_q, n_q)
        return Phi, Bm, Bp, Sm, Sp

    def rhs(t: float, z: np.ndarray) -> np.ndarray:
        Phi, Bm, Bp, Sm, Sp = unpack(z)
        A_q = ode.A_q(t)
        B_q = ode.B_q(t)
        lam_p = (t - t_k) / h
        lam_m = 1.0 - lam_p
        return np.concatenate([
            (A_q @ Phi).ravel(),
            (A_q @ Bm + lam_m * B_q).ravel(),
            (A_q @ Bp + lam_p * B_q).ravel(),
            (A_q @ Sm + lam_m * eye).ravel(),
            (A_q @ Sp + lam_p * eye).ravel(),
        ])

    z_0 = np.zeros(offsets[-1])
    z_0[: n_q * n_q] = eye.ravel()
    result = solve_ivp(
        rhs, (t_k, t_k1), z_0, method="DOP853", rtol=RTOL, atol=ATOL, max_step=h / MIN_SUBSTEPS
    )
    if not result.success or not np.all(np.isfinite(result.y[:, -1])):
        raise DiscretizationError(
            f"transition matrices of interval {interval} could not be integrated: {result.message}",
            interval=interval,
        )
    Phi, Bm, Bp, Sm, Sp = unpack(result.y[:, -1])
    return DiscreteTransition(
        interval=interval, t_k=t_k, t_k1=t_k1,
        A_q=Phi, B_minus=Bm, B_plus=Bp, S_minus=Sm, S_plus=Sp,
    )


def interpolate_A_B(
    sys: NonlinearSystem, nominal: DenseNominal, t: float, interval: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Jacobians A(t), B(t) at the densely integrated nominal state and FOH input."""
    A, B, _ = linearize(sys, t, nominal.state(t, interval), nominal.input(t))
    return A, B


def discretize_trajectory(
    sys: NonlinearSystem,
    nominal: DenseNominal,
    alpha: float,
    lambda_w: float,
) -> List[DiscreteTransition]:
    """Transition matrices for every interval of the nominal grid."""
    times = nominal.trajectory.times
    transitions = []
    for k in range(nominal.trajectory.N):
        ode = build_vectorized_ode(
            lambda t, k=k: interpolate_A_B(sys, nominal, t, k)[0],
            lambda t, k=k: interpolate_A_B(sys, nominal, t, k)[1],
            alpha, lambda_w, n_x=sys.n_x, n_u=sys.n_u,
        )
        transitions.append(foh_discretize(ode, times[k], times[k + 1], interval=k))
    logger.info("Discretized %d intervals", len(transitions))
    return transitions
