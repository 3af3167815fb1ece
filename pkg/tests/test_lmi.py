"""Unit tests for the matrix inequalities, halfspaces and cost terms."""

import unittest

import cvxpy as cp
import numpy as np
from numpy.testing import assert_allclose

from errors import InfeasibleNominalError, InvalidArgumentError
from models.problem import EllipsoidalObstacle, FunnelProblem, HalfspaceSet
from models.trajectory import NominalTrajectory
from synthesis.lmi import (
    build_H,
    build_halfspaces,
    build_input_containment_lmi,
    build_state_containment_lmi,
    c_condition_rows,
    funnel_entry_log_volume,
    linearize_obstacle,
    logdet_epigraph,
    lyapunov_rate,
    max_radius,
    objective_value,
)
from utils.linalg import lambda_max


class TestDifferentialLMI(unittest.TestCase):

    def setUp(self):
        self.A = np.array([[0.0, 1.0], [0.0, 0.0]])
        self.B = np.array([[0.0], [1.0]])
        self.F = np.array([[0.0], [0.1]])
        self.Q = np.array([[2.0, 0.3], [0.3, 1.0]])
        self.Y = np.array([[-1.0, -2.0]])

    def test_linear_layout(self):
        Qdot = lyapunov_rate(self.Q, self.Y, self.A, self.B, 0.5, 0.5)
        H = build_H(self.Q, Qdot, self.Y, 1.0, 0.0, 0.5, 0.5, self.A, self.B, self.F,
                    np.zeros((2, 0)), np.zeros((0, 2)), np.zeros((0, 1)), np.zeros((0, 1)))
        self.assertEqual(H.shape, (3, 3))
        assert_allclose(H, H.T)
        assert_allclose(H[:2, :2], np.zeros((2, 2)), atol=1e-14)
        assert_allclose(H[:2, 2], self.F[:, 0])
        self.assertAlmostEqual(H[2, 2], -0.5)

    def test_nonlinear_layout(self):
        E = np.array([[1.0], [0.0]])
        C = np.array([[1.0, 0.0]])
        D = np.zeros((1, 1))
        G = np.zeros((1, 1))
        Qdot = np.zeros((2, 2))
        H = build_H(self.Q, Qdot, self.Y, 2.0, 0.5, 0.1, 0.2, self.A, self.B, self.F, E, C, D, G)
        self.assertEqual(H.shape, (5, 5))
        assert_allclose(H[2, 2], -2.0)
        assert_allclose(H[4, 4], -2.0 / 0.25)
        assert_allclose(H[4:, :2], C @ self.Q)
        assert_allclose(H[:2, 2], 2.0 * E[:, 0])

    def test_gamma_too_small(self):
        E = np.array([[1.0], [0.0]])
        with self.assertRaises(InvalidArgumentError):
            build_H(self.Q, self.Q, self.Y, 1.0, 0.0, 0.1, 0.1, self.A, self.B, self.F,
                    E, np.array([[1.0, 0.0]]), np.zeros((1, 1)), np.zeros((1, 1)))

    def test_certificate_bounds_lyapunov_rate(self):
        # H <= 0 implies V' + (alpha + lambda_w) V - lambda_w |w|^2 <= 0 for V = eta^T Q^{-1} eta
        # along every admissible (eta, w, p) with |p| <= gamma |q|
        rng = np.random.default_rng(21)
        for trial in range(20):
            n_x, n_u, n_w = int(rng.integers(2, 4)), int(rng.integers(1, 3)), int(rng.integers(1, 3))
            n_p = n_q = int(rng.integers(1, 3))
            A, B, F = (0.5 * rng.standard_normal(shape) for shape in ((n_x, n_x), (n_x, n_u), (n_x, n_w)))
            E, C, D, G = (0.5 * rng.standard_normal(shape) for shape in ((n_x, n_p), (n_q, n_x), (n_q, n_u), (n_q, n_w)))
            R = rng.standard_normal((n_x, n_x))
            Q = R @ R.T + 0.5 * np.eye(n_x)
            Y = rng.standard_normal((n_u, n_x))
            alpha, lambda_w, nu = (float(v) for v in rng.uniform(0.2, 1.5, 3))
            gamma = 0.5 * np.sqrt(nu * lambda_w) / max(float(np.linalg.norm(G, 2)), 1.0)

            H0 = build_H(Q, np.zeros((n_x, n_x)), Y, nu, gamma, alpha, lambda_w, A, B, F, E, C, D, G)
            H12, H22 = H0[:n_x, n_x:], H0[n_x:, n_x:]
            Qdot = H0[:n_x, :n_x] - H12 @ np.linalg.solve(H22, H12.T) + rng.uniform(0.0, 0.1) * np.eye(n_x)
            Qdot = 0.5 * (Qdot + Qdot.T)
            H = build_H(Q, Qdot, Y, nu, gamma, alpha, lambda_w, A, B, F, E, C, D, G)
            self.assertLessEqual(lambda_max(H), 1e-9 * max(1.0, float(np.abs(H).max())))

            K = np.linalg.solve(Q, Y.T).T
            violations = 0
            for _ in range(1000):
                eta = rng.standard_normal(n_x)
                w = rng.standard_normal(n_w)
                w *= rng.uniform(0.0, 1.0) / np.linalg.norm(w)
                q = (C + D @ K) @ eta + G @ w
                p = rng.standard_normal(n_p)
                p *= rng.uniform(0.0, 1.0) * gamma * np.linalg.norm(q) / np.linalg.norm(p)
                xi = np.linalg.solve(Q, eta)
                V = float(eta @ xi)
                V_dot = 2.0 * xi @ ((A + B @ K) @ eta + E @ p + F @ w) - xi @ Qdot @ xi
                bound = V_dot + (alpha + lambda_w) * V - lambda_w * float(w @ w)
                if bound > 1e-9 * max(1.0, abs(V_dot), V):
                    violations += 1
            self.assertEqual(violations, 0, f"instance {trial}")


class TestContainment(unittest.TestCase):
    """The containment LMI is PSD exactly when the funnel support fits the margin."""

    def test_state_lmi_matches_support(self):
        Q = np.diag([4.0, 1.0])
        a = np.array([1.0, 0.0])
        x_bar = np.zeros(2)
        # support of {eta : eta^T Q^{-1} eta <= 1/c} along a is sqrt(a^T Q a / c) = 2 for c = 1
        inside = build_state_containment_lmi(Q, 1.0, x_bar, a, 2.5)
        outside = build_state_containment_lmi(Q, 1.0, x_bar, a, 1.5)
        self.assertGreaterEqual(np.linalg.eigvalsh(inside)[0], -1e-12)
        self.assertLess(np.linalg.eigvalsh(outside)[0], 0.0)

    def test_input_lmi_matches_support(self):
        Q = np.eye(2)
        K = np.array([[1.0, 1.0]])
        Y = K @ Q
        a = np.array([1.0])
        # support of K eta is sqrt(2)
        self.assertGreaterEqual(np.linalg.eigvalsh(build_input_containment_lmi(Q, Y, 1.0, [0.0], a, 1.5))[0], -1e-12)
        self.assertLess(np.linalg.eigvalsh(build_input_containment_lmi(Q, Y, 1.0, [0.0], a, 1.4))[0], 0.0)

    def test_support_oracle_random(self):
        rng = np.random.default_rng(17)
        for trial in range(100):
            n_x, n_u = int(rng.integers(1, 5)), int(rng.integers(1, 3))
            R = rng.standard_normal((n_x, n_x))
            Q = R @ R.T + 0.1 * np.eye(n_x)
            Y = rng.standard_normal((n_u, n_x))
            c = float(rng.uniform(0.05, 1.0))
            # ratio of margin to support, kept away from 1
            ratio = float(rng.choice([rng.uniform(0.5, 0.95), rng.uniform(1.05, 1.5)]))

            a = rng.standard_normal(n_x)
            a /= np.linalg.norm(a)
            x_bar = rng.standard_normal(n_x)
            support = np.sqrt(a @ Q @ a / c)
            lmi = build_state_containment_lmi(Q, c, x_bar, a, float(a @ x_bar) + ratio * support)
            with self.subTest(trial=trial, kind="state"):
                self.assertEqual(np.linalg.eigvalsh(lmi)[0] >= -1e-9, ratio >= 1.0)

            a_u = rng.standard_normal(n_u)
            a_u /= np.linalg.norm(a_u)
            u_bar = rng.standard_normal(n_u)
            v = Y.T @ a_u
            support_u = np.sqrt(v @ np.linalg.solve(Q, v) / c)
            if support_u < 1e-2:
                continue
            lmi_u = build_input_containment_lmi(Q, Y, c, u_bar, a_u, float(a_u @ u_bar) + ratio * support_u)
            with self.subTest(trial=trial, kind="input"):
                self.assertEqual(np.linalg.eigvalsh(lmi_u)[0] >= -1e-9, ratio >= 1.0)

    def test_nominal_outside_halfspace(self):
        with self.assertRaises(InfeasibleNominalError) as context:
            build_state_containment_lmi(np.eye(2), 1.0, np.array([1.0, 0.0]), np.array([1.0, 0.0]), 1.0,
                                        node=4, constraint=0, label="wall")
        self.assertEqual(context.exception.node, 4)
        self.assertEqual(context.exception.label, "wall")


class TestCCondition(unittest.TestCase):

    def test_rows(self):
        times = np.array([0.0, 1.0, 2.0])
        G_c, h_c = c_condition_rows(0.5, times)
        self.assertEqual(G_c.shape, (3 * 2 + 2, 3))
        feasible = np.array([0.3, 0.3 * np.exp(0.5), 0.3 * np.exp(1.0)])
        self.assertTrue(np.all(G_c @ feasible <= h_c + 1e-12))
        too_fast = feasible * np.array([1.0, 1.1, 1.0])
        self.assertFalse(np.all(G_c @ too_fast <= h_c + 1e-12))
        G_u, _ = c_condition_rows(0.5, times, include_lower=False)
        self.assertEqual(G_u.shape, (3 + 2, 3))

    def test_alpha_must_be_positive(self):
        with self.assertRaises(InvalidArgumentError):
            c_condition_rows(0.0, np.array([0.0, 1.0]))


class TestObstacles(unittest.TestCase):

    def setUp(self):
        self.obstacle = EllipsoidalObstacle(center=[2.0, 0.0], shape=2.0 * np.eye(2), label="disc")

    def test_tangent_plane(self):
        x_bar = np.array([0.0, 0.0, 0.3])
        a, b = linearize_obstacle(self.obstacle, x_bar)
        self.assertAlmostEqual(float(np.linalg.norm(a)), 1.0)
        assert_allclose(a, [1.0, 0.0, 0.0], atol=1e-12)
        # disc of radius 0.5 around (2, 0): tangent at x = 1.5
        self.assertAlmostEqual(b, 1.5)
        angles = np.linspace(0.0, 2 * np.pi, 50)
        boundary = np.column_stack([2.0 + 0.5 * np.cos(angles), 0.5 * np.sin(angles), np.zeros(50)])
        self.assertTrue(np.all(boundary @ a >= b - 1e-12))

    def test_nominal_inside_obstacle(self):
        with self.assertRaises(InfeasibleNominalError):
            linearize_obstacle(self.obstacle, np.array([2.1, 0.0, 0.0]))

    def test_halfspace_sets(self):
        traj = NominalTrajectory(t_0=0.0, t_f=1.0, x=np.zeros((3, 3)), u=np.ones((3, 2)))
        state, inputs = build_halfspaces([self.obstacle], [0.0, -np.inf], [2.0, 2.0], traj)
        self.assertEqual(state.m, 1)
        self.assertEqual(state.labels, ["disc"])
        self.assertEqual(inputs.m, 3)
        self.assertEqual(inputs.labels, ["u[0] <= 2", "u[0] >= 0", "u[1] <= 2"])
        assert_allclose(inputs.a[1, 1], [-1.0, 0.0])
        assert_allclose(inputs.b[1], [2.0, 0.0, 2.0])

    def test_nominal_through_obstacle_names_node(self):
        x = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [4.0, 0.0, 0.0]])
        traj = NominalTrajectory(t_0=0.0, t_f=1.0, x=x, u=np.ones((3, 2)))
        with self.assertRaises(InfeasibleNominalError) as context:
            build_halfspaces([self.obstacle], None, None, traj)
        self.assertEqual(context.exception.node, 1)


class TestObjective(unittest.TestCase):

    def test_logdet_epigraph(self):
        Q = cp.Variable((3, 3), symmetric=True)
        log_det, constraints = logdet_epigraph(Q)
        target = np.diag([1.0, 2.0, 3.0])
        problem = cp.Problem(cp.Maximize(log_det), constraints + [Q == target])
        problem.solve(solver=cp.CLARABEL)
        self.assertAlmostEqual(problem.value, np.log(6.0), places=5)

    def test_logdet_epigraph_random(self):
        rng = np.random.default_rng(4)
        for trial in range(20):
            n = int(rng.integers(1, 5))
            R = rng.standard_normal((n, n))
            target = R @ R.T + 0.5 * np.eye(n)
            Q = cp.Variable((n, n), symmetric=True)
            log_det, constraints = logdet_epigraph(Q)
            problem = cp.Problem(cp.Maximize(log_det), constraints + [Q == target])
            problem.solve(solver=cp.CLARABEL)
            with self.subTest(trial=trial, n=n):
                self.assertAlmostEqual(problem.value, np.linalg.slogdet(target)[1], places=5)

    def test_metrics(self):
        Q_0 = np.diag([0.08, 0.08, 0.06])
        self.assertAlmostEqual(funnel_entry_log_volume(Q_0, 0.5), np.log(0.08 * 0.08 * 0.06) + 3 * np.log(2.0))
        assert_allclose(max_radius(np.array([Q_0, 4.0 * Q_0])), [np.sqrt(0.08), np.sqrt(0.32)])

    def test_objective_value(self):
        n_nodes = 3
        problem = FunnelProblem(
            alpha=1.0, lambda_w=1.0, w_c=2.0, w_Q0=0.5, w_Qbar=1.0,
            Q_i=np.eye(2), Q_f=np.eye(2),
            state_halfspaces=HalfspaceSet.empty(n_nodes, 2),
            input_halfspaces=HalfspaceSet.empty(n_nodes, 1),
            gamma=np.zeros(n_nodes),
        )
        value = objective_value(np.eye(2), 0.25, np.ones(n_nodes), problem, 0.0, 1.0)
        # w_c c_0 - w_Q0 log det Q_0 + w_Qbar (t_f - t_0) / N sum vQ
        self.assertAlmostEqual(value, 0.5 + 0.0 + 0.5 * 3)
        self.assertGreaterEqual(lambda_max(np.eye(2)), 1.0)


if __name__ == '__main__':
    unittest.main()
