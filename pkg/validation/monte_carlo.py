"""
Monte-Carlo invariance check of the true nonlinear closed loop.

Samples start on the boundary of E(t_0) = {eta : eta^T Q_0^{-1} eta <= 1}
and of E_c(t_0) = {eta : eta^T Q_0^{-1} eta <= 1/c_0} and are propagated
through

    eta' = f(t, x_bar + eta, u_bar + K(t) eta, w) - f(t, x_bar, u_bar, 0)

under a unit-norm disturbance. Each sample draws from its own generator
spawned from the run seed, so results do not depend on evaluation order.
"""

import logging
from typing import List, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from errors import IntegrationError
from models.report import DisturbancePolicy, MonteCarloSection, SampleTrace
from models.system import NonlinearSystem
from synthesis.funnel import ContinuousFunnel
from utils.linalg import psd_sqrt

from .checks import DENSE_POINTS

logger = logging.getLogger(__name__)

MC_TOLERANCE = 1e-3
RTOL = 1e-9
ATOL = 1e-11


def sample_ellipsoid_surface(Q: np.ndarray, scale: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points on {eta : eta^T Q^{-1} eta = scale^2}, rows of the result."""
    directions = rng.standard_normal((n, Q.shape[0]))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return scale * directions @ psd_sqrt(Q).T


def _unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def disturbance_schedule(policy: DisturbancePolicy, n_intervals: int, n_w: int, rng: np.random.Generator) -> np.ndarray:
    """Disturbance value per interval, shape (n_intervals, n_w)."""
    if policy is DisturbancePolicy.ZERO:
        return np.zeros((n_intervals, n_w))
    if policy is DisturbancePolicy.CONSTANT:
        return np.tile(_unit_vector(rng, n_w), (n_intervals, 1))
    return np.array([_unit_vector(rng, n_w) for _ in range(n_intervals)])


def _lyapunov(funnel: ContinuousFunnel, t: float, eta: np.ndarray) -> float:
    return float(eta @ np.linalg.solve(funnel.Q(t), eta))


def propagate_sample(
    sys: NonlinearSystem,
    funnel: ContinuousFunnel,
    eta_0: np.ndarray,
    w_schedule: np.ndarray,
    points_per_interval: int = DENSE_POINTS,
) -> Tuple[np.ndarray, np.ndarray]:
    """Dense times and deviations eta(t).

    Raises:
        IntegrationError: With the integrator message if an interval fails
    """
    sol = funnel.solution
    nominal = funnel.nominal
    times = sol.times
    eta = np.asarray(eta_0, dtype=float)
    t_out: List[float] = []
    eta_out: List[np.ndarray] = []
    for k in range(sol.N):
        w = w_schedule[k]

        def rhs(t: float, e: np.ndarray, k: int = k, w: np.ndarray = w) -> np.ndarray:
            x_bar = nominal.state(t, k)
            u_bar = nominal.input(t)
            u = u_bar + funnel.K(t) @ e
            return sys.f(t, x_bar + e, u, w) - sys.f(t, x_bar, u_bar, np.zeros(sys.n_w))

        last = k == sol.N - 1
        t_eval = np.linspace(times[k], times[k + 1], points_per_interval + (1 if last else 0), endpoint=last)
        result = solve_ivp(
            rhs, (times[k], times[k + 1]), eta, method="DOP853", rtol=RTOL, atol=ATOL,
            t_eval=t_eval, dense_output=True,
        )
        if not result.success:
            raise IntegrationError(f"interval {k}: {result.message}", interval=k)
        if not np.all(np.isfinite(result.y)):
            raise IntegrationError(f"interval {k}: non-finite deviation", interval=k)
        t_out.extend(result.t.tolist())
        eta_out.extend(result.y.T)
        eta = result.sol(times[k + 1])
    return np.array(t_out), np.array(eta_out)


def _trace(
    index: int,
    kind: str,
    funnel: ContinuousFunnel,
    t: np.ndarray,
    eta: np.ndarray,
    tolerance: float,
    keep_trace: bool,
) -> SampleTrace:
    sol = funnel.solution
    V = np.array([_lyapunov(funnel, float(tk), ek) for tk, ek in zip(t, eta)])
    c = np.array([sol.c_at(float(tk)) for tk in t])
    bound = np.maximum(np.exp(-sol.alpha * (t - sol.t_0)) * V[0], 1.0)
    attractivity = float(np.max((V - bound) / bound))
    max_V, max_cV = float(V.max()), float((c * V).max())
    if kind == "E":
        invariant = max_V <= 1.0 + tolerance
    else:
        invariant = max_cV <= 1.0 + tolerance
    return SampleTrace(
        index=index, kind=kind, V0=float(V[0]), max_V=max_V, max_cV=max_cV,
        attractivity_residual=attractivity,
        passed=bool(invariant and attractivity <= tolerance),
        times=t.tolist() if keep_trace else [],
        V=V.tolist() if keep_trace else [],
    )


def monte_carlo_invariance(
    sys: NonlinearSystem,
    funnel: ContinuousFunnel,
    n_E: int = 50,
    n_Ec: int = 50,
    policy: DisturbancePolicy = DisturbancePolicy.PIECEWISE_CONSTANT,
    seed: int = 0,
    tolerance: float = MC_TOLERANCE,
    points_per_interval: int = DENSE_POINTS,
    keep_traces: bool = True,
) -> MonteCarloSection:
    """Propagate boundary samples of E(t_0) and E_c(t_0) and check invariance.

    Args:
        sys: The true nonlinear system
        funnel: Reconstructed continuous funnel with its dense nominal
        n_E: Samples on the boundary of E(t_0)
        n_Ec: Samples on the boundary of E_c(t_0)
        policy: Time structure of the unit-norm disturbance
        seed: Run seed; per-sample generators are spawned from it
        tolerance: Relative tolerance of the Lyapunov checks
        points_per_interval: Dense evaluation points per interval
        keep_traces: Store the V(t) traces in the section

    Returns:
        The Monte-Carlo section of the validation report
    """
    sol = funnel.solution
    children = np.random.SeedSequence(seed).spawn(n_E + n_Ec)
    samples: List[SampleTrace] = []
    for index, child in enumerate(children):
        rng = np.random.default_rng(child)
        kind = "E" if index < n_E else "Ec"
        scale = 1.0 if kind == "E" else 1.0 / np.sqrt(float(sol.c[0]))
        eta_0 = sample_ellipsoid_surface(sol.Q[0], scale, 1, rng)[0]
        w_schedule = disturbance_schedule(policy, sol.N, sys.n_w, rng)
        try:
            t, eta = propagate_sample(sys, funnel, eta_0, w_schedule, points_per_interval)
        except IntegrationError as exc:
            logger.warning("Sample %d (%s): integration failed on %s", index, kind, exc)
            samples.append(SampleTrace(
                index=index, kind=kind, V0=float("nan"), max_V=float("nan"), max_cV=float("nan"),
                attractivity_residual=float("nan"), passed=False, failed_integration=True,
                message=str(exc),
            ))
            continue
        samples.append(_trace(index, kind, funnel, t, eta, tolerance, keep_traces))
    n_passed = sum(1 for s in samples if s.passed)
    logger.info("Monte-Carlo: %d/%d samples passed (%s)", n_passed, len(samples), policy.value)
    return MonteCarloSection(
        seed=seed, policy=policy, tolerance=tolerance,
        n_E=n_E, n_Ec=n_Ec, n_passed=n_passed, samples=samples,
    )
