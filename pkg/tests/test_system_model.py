"""Unit tests for system evaluation, linearization and Lipschitz sampling."""

import unittest

import numpy as np
from numpy.testing import assert_allclose

from dynamics import create_system
from dynamics.system_model import (
    estimate_lipschitz,
    evaluate_dynamics,
    linearize,
    linearize_trajectory,
    lure_decompose,
    nonlinearity_residual,
    phi_jacobian,
    reconstruction_residual,
)
from dynamics.nominal import integrate_nominal
from dynamics.unicycle import benchmark_inputs
from errors import DegenerateRegionError, InvalidArgumentError, LinearizationError
from models.system import NonlinearSystem
from models.trajectory import NominalTrajectory
from tests.helpers import make_double_integrator


def node_argument(sys, traj):
    """t -> q_bar at the node closest to t."""

    def nominal_q(t):
        k = int(np.argmin(np.abs(traj.times - t)))
        return sys.C @ traj.x[k] + sys.D @ traj.u[k]

    return nominal_q


class TestLinearization(unittest.TestCase):
    """Jacobians of the unicycle, analytic and by central differences."""

    def setUp(self):
        self.sys = create_system("unicycle")
        data = {key: getattr(self.sys, key) for key in self.sys.__fields__}
        data.update(jacobian=None, phi_jacobian=None)
        self.fd_sys = NonlinearSystem(**data)
        self.x = np.array([0.3, -0.2, 0.7])
        self.u = np.array([1.2, 0.4])

    def test_unicycle_rates(self):
        rates = evaluate_dynamics(self.sys, 0.0, [0.0, 0.0, np.pi / 2], [1.0, 0.5], [0.0, 0.0])
        assert_allclose(rates, [0.0, 1.0, 0.5], atol=1e-15)

    def test_wrong_dimension(self):
        with self.assertRaises(InvalidArgumentError):
            evaluate_dynamics(self.sys, 0.0, [0.0, 0.0], [1.0, 0.0], [0.0, 0.0])

    def test_finite_differences_match_analytic(self):
        A, B, F = linearize(self.sys, 0.0, self.x, self.u)
        A_fd, B_fd, F_fd = linearize(self.fd_sys, 0.0, self.x, self.u)
        assert_allclose(A_fd, A, atol=1e-7)
        assert_allclose(B_fd, B, atol=1e-7)
        assert_allclose(F_fd, F, atol=1e-7)
        q = np.array([0.7, 1.2])
        assert_allclose(phi_jacobian(self.fd_sys, 0.0, q), phi_jacobian(self.sys, 0.0, q), atol=1e-7)

    def test_jacobian_error_decays_quadratically(self):
        A, _, _ = linearize(self.fd_sys, 0.0, self.x, self.u)
        f_bar = evaluate_dynamics(self.sys, 0.0, self.x, self.u, np.zeros(2))
        delta = 1e-2 * np.array([0.6, -0.3, 0.74])

        def error(d):
            f = evaluate_dynamics(self.sys, 0.0, self.x + d, self.u, np.zeros(2))
            return float(np.linalg.norm(f - f_bar - A @ d))

        ratio = error(delta) / error(delta / 2.0)
        self.assertGreater(ratio, 3.8)
        self.assertLess(ratio, 4.2)

    def test_non_finite_jacobian(self):
        def bad_rhs(t, x, u, w):
            return np.array([np.sqrt(x[0]), u[0] + w[0]])

        sys = make_double_integrator()
        data = {key: getattr(sys, key) for key in sys.__fields__}
        data.update(f=bad_rhs)
        with self.assertRaises(LinearizationError):
            linearize(NonlinearSystem(**data), 0.0, [0.0, 0.0], [0.0])

    def test_linear_system_has_no_residual(self):
        sys = make_double_integrator()
        p, q = nonlinearity_residual(sys, 0.0, [1.0, 2.0], [0.5], [0.1])
        self.assertEqual(p.shape, (0,))
        self.assertEqual(q.shape, (0,))


class TestLureDecomposition(unittest.TestCase):
    """The residual nonlinearity reproduces f exactly around the nominal."""

    def setUp(self):
        self.sys = create_system("unicycle")
        self.x_bar = np.array([1.0, 0.5, 0.4])
        self.u_bar = np.array([1.0, 0.3])
        q_bar = self.sys.C @ self.x_bar + self.sys.D @ self.u_bar
        self.lure = lure_decompose(self.sys, lambda t: q_bar)
        self.q_bar = q_bar

    def test_zero_jacobian_at_nominal(self):
        assert_allclose(phi_jacobian(self.lure, 0.0, self.q_bar), np.zeros((2, 2)), atol=1e-12)

    def test_reconstruction_is_exact(self):
        A, B, F = linearize(self.lure, 0.0, self.x_bar, self.u_bar)
        rng = np.random.default_rng(3)
        for _ in range(5):
            x = self.x_bar + rng.normal(size=3)
            u = self.u_bar + rng.normal(size=2)
            w = rng.normal(size=2)
            residual = reconstruction_residual(self.lure, 0.0, x, u, w, A, B, F)
            assert_allclose(residual, np.zeros(3), atol=1e-12)


class TestLipschitzEstimate(unittest.TestCase):
    """Sampled Lipschitz constants along the benchmark nominal."""

    @classmethod
    def setUpClass(cls):
        cls.sys = create_system("unicycle")
        cls.traj = integrate_nominal(cls.sys, np.zeros(3), benchmark_inputs(), 0.0, 5.0, 10)
        cls.region = np.diag([0.08, 0.08, 0.06])

    def test_reproducible_and_positive(self):
        first = estimate_lipschitz(self.sys, self.traj, self.region, n_samples=50, seed=7)
        second = estimate_lipschitz(self.sys, self.traj, self.region, n_samples=50, seed=7)
        assert_allclose(first, second)
        self.assertEqual(first.shape, (11,))
        self.assertTrue(np.all(first > 0))

    def test_raw_nonlinearity_is_bounded_by_its_slope(self):
        # ||d(u cos th, u sin th)|| <= sqrt(1 + u^2) ||d(th, u)|| locally; u stays near 1
        gamma = estimate_lipschitz(self.sys, self.traj, self.region, n_samples=100, inflation=1.0)
        self.assertTrue(np.all(gamma <= np.sqrt(1.0 + 1.5 ** 2)))

    def test_residual_constant_is_smaller(self):
        lure = lure_decompose(self.sys, node_argument(self.sys, self.traj))
        raw = estimate_lipschitz(self.sys, self.traj, self.region, n_samples=100)
        residual = estimate_lipschitz(lure, self.traj, self.region, n_samples=100)
        self.assertTrue(np.all(residual < 0.5 * raw))

    def test_monotone_in_region(self):
        lure = lure_decompose(self.sys, node_argument(self.sys, self.traj))
        small = estimate_lipschitz(lure, self.traj, self.region, n_samples=50, seed=2)
        large = estimate_lipschitz(lure, self.traj, 4.0 * self.region, n_samples=50, seed=2, prior=small)
        self.assertTrue(np.all(large >= small))
        self.assertGreater(float(large.mean()), float(small.mean()))


class TestLipschitzScalar(unittest.TestCase):
    """Scalar nonlinearities with known Lipschitz constants."""

    def setUp(self):
        self.traj = NominalTrajectory(t_0=0.0, t_f=1.0, x=np.ones((3, 1)), u=np.zeros((3, 1)))

    def scalar_system(self, phi):
        return NonlinearSystem(
            name="scalar", n_x=1, n_u=1, n_w=1, n_p=1, n_q=1,
            f=lambda t, x, u, w: phi(t, x) + u + w, phi=phi,
            E=[[1.0]], C=[[1.0]], D=[[0.0]], G=[[0.0]],
        )

    def test_linear_map(self):
        sys = self.scalar_system(lambda t, q: 2.0 * q)
        gamma = estimate_lipschitz(sys, self.traj, np.eye(1), n_samples=20, inflation=1.1)
        assert_allclose(gamma, 2.2 * np.ones(3), rtol=1e-9)

    def test_constant_map_stays_at_prior(self):
        sys = self.scalar_system(lambda t, q: np.array([3.0]))
        assert_allclose(estimate_lipschitz(sys, self.traj, np.eye(1), n_samples=20), np.zeros(3))
        prior = np.array([0.5, 0.25, 0.5])
        assert_allclose(estimate_lipschitz(sys, self.traj, np.eye(1), n_samples=20, prior=prior), prior)

    def test_prior_is_a_floor(self):
        prior = np.full(11, 10.0)
        gamma = estimate_lipschitz(self.sys, self.traj, self.region, n_samples=10, prior=prior)
        assert_allclose(gamma, prior)

    def test_invalid_arguments(self):
        with self.assertRaises(InvalidArgumentError):
            estimate_lipschitz(self.sys, self.traj, self.region, n_samples=1)
        with self.assertRaises(InvalidArgumentError):
            estimate_lipschitz(self.sys, self.traj, self.region, inflation=0.9)
        with self.assertRaises(DegenerateRegionError):
            estimate_lipschitz(self.sys, self.traj, np.zeros((3, 3)))

    def test_linear_system_gives_zero(self):
        sys = make_double_integrator()
        traj = NominalTrajectory(t_0=0.0, t_f=1.0, x=np.zeros((3, 2)), u=np.zeros((3, 1)))
        assert_allclose(estimate_lipschitz(sys, traj, np.eye(2)), np.zeros(3))
        linearization = linearize_trajectory(sys, traj)
        assert_allclose(linearization.A[0], [[0.0, 1.0], [0.0, 0.0]], atol=1e-8)
        assert_allclose(linearization.B[0], [[0.0], [1.0]], atol=1e-8)


if __name__ == '__main__':
    unittest.main()
