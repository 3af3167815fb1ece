"""Tests for the funnel validation checks and the Monte-Carlo propagation."""

import unittest
from types import SimpleNamespace
from unittest import mock

import numpy as np
from numpy.testing import assert_allclose

from dynamics.nominal import integrate_nominal
from errors import IntegrationError, InvalidArgumentError
from models.problem import HalfspaceSet
from models.report import DisturbancePolicy
from solvers import SolverConfig
from synthesis.funnel import ContinuousFunnel
from synthesis.lmi import c_condition_rows
from synthesis.pipeline import synthesize
from tests.helpers import double_integrator_setup, make_double_integrator, rest_inputs, tiny_solution
from utils.linalg import lambda_min
from validation import run_validation
from validation.checks import (
    check_c_condition,
    check_containment,
    check_dlmi,
    check_intersample,
    dense_times,
    project_ellipsoid,
    project_funnel_2d,
)
from validation.monte_carlo import (
    disturbance_schedule,
    monte_carlo_invariance,
    propagate_sample,
    sample_ellipsoid_surface,
)

FLOOR = 0.02


class TestCCondition(unittest.TestCase):

    def test_constant_one(self):
        self.assertAlmostEqual(check_c_condition(tiny_solution([1.0, 1.0, 1.0])), 0.0)

    def test_harmonic_stays_above_envelope(self):
        # alpha = 1 on [0, 1]: 1/c is linear, exp(-t)/c_0 convex with equal endpoints
        sol = tiny_solution([0.3, 0.3 * np.e])
        worst = check_c_condition(sol, 50)
        self.assertGreaterEqual(worst, -1e-9)
        self.assertLessEqual(worst, 1e-9)

    def test_violation(self):
        sol = tiny_solution([0.2, 1.0])
        self.assertLess(check_c_condition(sol), -0.1)

    def test_random_feasible_sequences(self):
        # node-feasible c_k keep the harmonic c(t) above the envelope everywhere
        rng = np.random.default_rng(30)
        for trial in range(100):
            N = int(rng.integers(1, 9))
            t_f = float(rng.uniform(0.5, 6.0))
            alpha = float(rng.uniform(0.05, 3.0))
            times = np.linspace(0.0, t_f, N + 1)
            c_0 = float(rng.uniform(0.01, 1.0))
            c = np.minimum(1.0, c_0 * np.exp(alpha * times)) * rng.uniform(0.05, 1.0, N + 1)
            c[0] = c_0
            G_c, h_c = c_condition_rows(alpha, times)
            with self.subTest(trial=trial, N=N, alpha=alpha):
                self.assertTrue(np.all(G_c @ c <= h_c + 1e-12))
                worst = check_c_condition(tiny_solution(c, alpha=alpha, t_f=t_f), 20)
                self.assertGreaterEqual(worst, -1e-9)

    def test_coarse_grid_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            check_c_condition(tiny_solution([1.0, 1.0]), 5)

    def test_dense_times(self):
        times = dense_times(tiny_solution([1.0, 1.0, 1.0]), 10)
        self.assertEqual(len(times), 21)
        self.assertEqual(times[0], 0.0)
        self.assertEqual(times[-1], 1.0)
        self.assertTrue(np.all(np.diff(times) > 0))


class TestProjection(unittest.TestCase):

    def test_diagonal(self):
        Q = np.diag([1.0, 2.0, 3.0])
        assert_allclose(project_ellipsoid(Q, 1.0, (0, 2)), np.diag([1.0, 3.0]))
        assert_allclose(project_ellipsoid(Q, 2.0, (1, 0)), np.diag([4.0, 2.0]))

    def test_invalid_pair(self):
        for pair in ((1, 1), (0, 3), (-1, 0)):
            with self.assertRaises(InvalidArgumentError):
                project_ellipsoid(np.eye(3), 1.0, pair)

    def test_sampled_boundary_inside_projection(self):
        rng = np.random.default_rng(11)
        A = rng.standard_normal((3, 3))
        Q = A @ A.T + 0.2 * np.eye(3)
        points = sample_ellipsoid_surface(Q, 1.0, 2000, rng)
        shape = project_ellipsoid(Q, 1.0, (0, 2))
        projected = points[:, [0, 2]]
        values = np.einsum("ij,ij->i", projected, np.linalg.solve(shape, projected.T).T)
        self.assertLessEqual(float(values.max()), 1.0 + 1e-9)
        # support along each axis is sqrt(Q_ii)
        self.assertLessEqual(float(np.abs(points[:, 1]).max()), np.sqrt(Q[1, 1]) + 1e-12)


class TestSampling(unittest.TestCase):

    def test_surface(self):
        rng = np.random.default_rng(0)
        Q = np.diag([0.08, 0.08, 0.06])
        points = sample_ellipsoid_surface(Q, 2.0, 50, rng)
        values = np.einsum("ij,ij->i", points, np.linalg.solve(Q, points.T).T)
        assert_allclose(values, 4.0 * np.ones(50), rtol=1e-10)

    def test_disturbance_policies(self):
        rng = np.random.default_rng(1)
        piecewise = disturbance_schedule(DisturbancePolicy.PIECEWISE_CONSTANT, 6, 2, rng)
        assert_allclose(np.linalg.norm(piecewise, axis=1), np.ones(6))
        self.assertFalse(np.allclose(piecewise[0], piecewise[1]))
        constant = disturbance_schedule(DisturbancePolicy.CONSTANT, 6, 2, rng)
        assert_allclose(constant, np.tile(constant[0], (6, 1)))
        self.assertAlmostEqual(float(np.linalg.norm(constant[0])), 1.0)
        assert_allclose(disturbance_schedule(DisturbancePolicy.ZERO, 6, 2, rng), np.zeros((6, 2)))


class TestLinearFunnelValidation(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.system = make_double_integrator()
        traj = integrate_nominal(cls.system, np.zeros(2), rest_inputs(), 0.0, 2.0, 16)
        setup = double_integrator_setup(q_min=FLOOR)
        cls.prepared, outcome = synthesize(cls.system, traj, setup, SolverConfig())
        cls.sol = outcome.solution
        cls.funnel = ContinuousFunnel(cls.sol, cls.prepared.system, cls.prepared.nominal)

    def validate(self, seed=0, policy=DisturbancePolicy.PIECEWISE_CONSTANT):
        return run_validation(
            self.system, self.prepared.system, self.sol, self.prepared.problem,
            self.prepared.linearization, self.funnel,
            seed=seed, n_E=3, n_Ec=3, policy=policy, points_per_interval=10,
        )

    def test_floor_holds(self):
        for Q in self.sol.Q:
            self.assertGreaterEqual(lambda_min(Q), FLOOR - 1e-7)
        for t in dense_times(self.sol, 10):
            self.assertGreater(lambda_min(self.funnel.Q(float(t))), 0.0)

    def test_equilibrium_sample(self):
        times, eta = propagate_sample(self.system, self.funnel, np.zeros(2), np.zeros((self.sol.N, 1)), 10)
        self.assertEqual(len(times), self.sol.N * 10 + 1)
        assert_allclose(eta, np.zeros_like(eta), atol=1e-12)

    def test_integration_failure_is_reported(self):
        failed = SimpleNamespace(success=False, message="Required step size is less than spacing between numbers.")
        with mock.patch("validation.monte_carlo.solve_ivp", return_value=failed):
            with self.assertRaises(IntegrationError) as ctx:
                propagate_sample(self.system, self.funnel, np.zeros(2), np.zeros((self.sol.N, 1)), 10)
            self.assertEqual(ctx.exception.interval, 0)
            with self.assertLogs("validation.monte_carlo", level="WARNING"):
                section = monte_carlo_invariance(self.system, self.funnel, n_E=1, n_Ec=1, points_per_interval=10)
        self.assertEqual(section.n_passed, 0)
        for sample in section.samples:
            self.assertTrue(sample.failed_integration)
            self.assertIn("Required step size", sample.message)

    def test_report_passes(self):
        report = self.validate()
        self.assertTrue(report.dlmi_passed)
        self.assertTrue(report.containment_passed)
        self.assertTrue(report.c_condition_passed)
        self.assertEqual(report.monte_carlo.n_passed, 6)
        self.assertTrue(report.passed)
        self.assertEqual(report.failures(), [])

    def test_constant_disturbance(self):
        report = self.validate(policy=DisturbancePolicy.CONSTANT)
        self.assertTrue(report.monte_carlo.passed)
        for sample in report.monte_carlo.samples:
            self.assertLessEqual(sample.attractivity_residual, 1e-3)

    def test_deterministic(self):
        self.assertEqual(self.validate(seed=4).json(), self.validate(seed=4).json())
        self.assertNotEqual(self.validate(seed=4).json(), self.validate(seed=5).json())

    def test_intersample_consistent_with_nodes(self):
        diagnostics = check_intersample(self.funnel, self.prepared.problem, self.prepared.system, 10)
        nodal = check_dlmi(self.sol, self.prepared.system, self.prepared.linearization)
        self.assertGreaterEqual(diagnostics.worst_dlmi_residual, max(nodal) - 1e-9)
        self.assertGreater(diagnostics.min_eig_Q, 0.0)

    def test_projection_at_node(self):
        shape = project_funnel_2d(self.funnel, (0, 1), float(self.sol.times[2]))
        assert_allclose(shape, self.sol.Q[2] / self.sol.c[2])

    def test_inflated_funnel_leaves_constraints(self):
        inflated = self.sol.with_updates(Q=100.0 * self.sol.Q)
        residuals = check_containment(inflated, self.prepared.problem)
        self.assertLess(min(r.residual for r in residuals), -1e-7)

    def test_no_constraints(self):
        problem = self.prepared.problem
        empty = problem.replace(
            state_halfspaces=HalfspaceSet.empty(self.sol.N + 1, 2),
            input_halfspaces=HalfspaceSet.empty(self.sol.N + 1, 1),
        )
        self.assertEqual(check_containment(self.sol, empty), [])


if __name__ == '__main__':
    unittest.main()
