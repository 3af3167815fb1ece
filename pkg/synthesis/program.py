"""
Assembly of the discrete funnel synthesis program.

Decision variables per node k: symmetric Q_k, Y_k, symmetric PSD slack Z_k
and scalars c_k, nu_k, vQ_k. The differential LMI H(t) <= 0 is written as
H_k + Z_k = 0 with Z_k >= 0: every block of Z_k except Z11 is pinned by an
equality, and Z11 drives the matrix ODE Q' = M + Z11 whose FOH
discretization links consecutive nodes.

In elastic mode every relaxable constraint family receives a nonnegative
slack per node and the program minimizes the weighted slack sum instead of
the funnel cost. This is used to name the families responsible for
infeasibility.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import cvxpy as cp
import numpy as np

from errors import AssemblyError
from models.problem import FunnelProblem
from models.system import LureLinearization, NonlinearSystem
from models.trajectory import NominalTrajectory
from utils.linalg import lower_triangle_indices

from .discretization import DiscreteTransition
from .lmi import (
    GAMMA_MIN,
    build_input_containment_lmi,
    build_objective,
    build_state_containment_lmi,
    c_condition_rows,
)

logger = logging.getLogger(__name__)

RELAXABLE_FAMILIES = (
    "state_containment",
    "input_containment",
    "boundary_initial",
    "boundary_final",
    "c_condition",
    "dlmi",
)
ELASTIC_WEIGHTS = {name: (1e3 if name == "dlmi" else 1.0) for name in RELAXABLE_FAMILIES}


@dataclass
class ConicProgram:
    """A cvxpy problem in conic form together with its named variables.

    Attributes:
        problem: The cvxpy problem handed to the solver
        variables: Named variables (Q_k, Y_k, Z_k, c, nu, vQ)
        families: Constraint families by name
        slacks: Elastic slack per family (elastic mode only)
    """

    problem: cp.Problem
    variables: Dict[str, cp.Variable]
    families: Dict[str, List[cp.Constraint]]
    n_nodes: int
    n_x: int
    n_u: int
    n_z: int
    elastic: bool = False
    slacks: Dict[str, cp.Variable] = field(default_factory=dict)

    def scalar_count(self) -> int:
        """Number of free scalars, counting symmetric matrices by their triangle."""
        total = 0
        for variable in self.variables.values():
            if variable.attributes.get("symmetric"):
                n = variable.shape[0]
                total += n * (n + 1) // 2
            else:
                total += int(np.prod(variable.shape)) if variable.shape else 1
        return total


def _pin_symmetric(block: cp.Expression, value: cp.Expression) -> cp.Constraint:
    """block == value on the lower triangle only.

    Both sides are symmetric; pinning the full block would repeat every
    off-diagonal row, which interior-point solvers handle badly.
    """
    n = block.shape[0]
    return cp.vec(block - value, order="F")[lower_triangle_indices(n)] == 0


def _check_inputs(
    problem: FunnelProblem,
    sys: NonlinearSystem,
    traj: NominalTrajectory,
    linearization: LureLinearization,
    transitions: Sequence[DiscreteTransition],
) -> None:
    n_nodes = traj.N + 1
    issues: List[str] = []
    if problem.n_nodes != n_nodes:
        issues.append(f"problem has {problem.n_nodes} nodes, trajectory {n_nodes}")
    if linearization.n_nodes != n_nodes:
        issues.append(f"linearization has {linearization.n_nodes} nodes, trajectory {n_nodes}")
    if len(transitions) != traj.N:
        issues.append(f"{len(transitions)} transitions for {traj.N} intervals")
    if problem.n_x != sys.n_x or traj.n_x != sys.n_x:
        issues.append("state dimension differs between problem, trajectory and system")
    if traj.n_u != sys.n_u:
        issues.append("input dimension differs between trajectory and system")
    if problem.input_halfspaces.m > 0 and problem.input_halfspaces.a.shape[2] != sys.n_u:
        issues.append("input halfspace normals must have n_u entries")
    if not np.all(np.isfinite(problem.gamma)):
        issues.append("gamma_k missing (NaN) at some nodes")
    elif not sys.is_linear and np.any(problem.gamma < GAMMA_MIN):
        bad = [int(k) for k in np.flatnonzero(problem.gamma < GAMMA_MIN)]
        issues.append(
            f"gamma_k below {GAMMA_MIN:g} at nodes {bad}; declare the system linear (n_p = n_q = 0) instead"
        )
    if issues:
        raise AssemblyError("; ".join(issues))


def assemble(
    problem: FunnelProblem,
    sys: NonlinearSystem,
    traj: NominalTrajectory,
    linearization: LureLinearization,
    transitions: Sequence[DiscreteTransition],
    elastic: bool = False,
) -> ConicProgram:
    """Build the conic program of the discrete funnel synthesis problem.

    Args:
        problem: Parameters, boundary matrices, halfspaces and gamma_k
        sys: System providing the constant selectors E, C, D, G
        traj: Nominal trajectory the funnel wraps
        linearization: Node Jacobians A_k, B_k, F_k
        transitions: FOH transition matrices, one per interval
        elastic: Build the slack-minimizing variant used for diagnosis

    Returns:
        The assembled program

    Raises:
        AssemblyError: On inconsistent dimensions or missing gamma_k
        InfeasibleNominalError: If the nominal violates a linearized constraint
    """
    _check_inputs(problem, sys, traj, linearization, transitions)
    n_nodes = traj.N + 1
    n_x, n_u, n_w = sys.n_x, sys.n_u, sys.n_w
    n_p, n_q = sys.n_p, sys.n_q
    n_z = n_x + n_p + n_w + n_q
    eps = problem.epsilon
    times = traj.times

    Q = [cp.Variable((n_x, n_x), symmetric=True, name=f"Q_{k}") for k in range(n_nodes)]
    Y = [cp.Variable((n_u, n_x), name=f"Y_{k}") for k in range(n_nodes)]
    Z = [cp.Variable((n_z, n_z), symmetric=True, name=f"Z_{k}") for k in range(n_nodes)]
    c = cp.Variable(n_nodes, name="c")
    nu = cp.Variable(n_nodes, name="nu")
    vQ = cp.Variable(n_nodes, name="vQ")
    variables: Dict[str, cp.Variable] = {"c": c, "nu": nu, "vQ": vQ}
    for k in range(n_nodes):
        variables[f"Q_{k}"] = Q[k]
        variables[f"Y_{k}"] = Y[k]
        variables[f"Z_{k}"] = Z[k]

    slacks: Dict[str, cp.Variable] = {}

    def slack(name: str, k: int) -> Optional[cp.Expression]:
        if not elastic:
            return None
        if name not in slacks:
            size = 1 if name.startswith("boundary") else n_nodes
            slacks[name] = cp.Variable(size, nonneg=True, name=f"slack_{name}")
        return slacks[name][0 if slacks[name].shape[0] == 1 else k]

    def psd(M: cp.Expression, name: str, k: int) -> cp.Constraint:
        s = slack(name, k)
        if s is None:
            return M >> 0
        return M + s * np.eye(M.shape[0]) >> 0

    families: Dict[str, List[cp.Constraint]] = {
        "dlmi": [], "dlmi_blocks": [], "shooting": [], "state_containment": [],
        "input_containment": [], "c_condition": [], "bounds": [],
        "boundary_initial": [], "boundary_final": [],
    }

    ix = slice(0, n_x)
    ip = slice(n_x, n_x + n_p)
    iw = slice(n_x + n_p, n_x + n_p + n_w)
    iq = slice(n_x + n_p + n_w, n_z)
    for k in range(n_nodes):
        F_k = linearization.F[k]
        blocks = families["dlmi_blocks"]
        families["dlmi"].append(psd(Z[k], "dlmi", k))
        blocks.append(Z[k][iw, ix] == -F_k.T)
        blocks.append(_pin_symmetric(Z[k][iw, iw], problem.lambda_w * np.eye(n_w)))
        if n_p > 0:
            gamma_k = float(problem.gamma[k])
            blocks.append(Z[k][ip, ix] == -nu[k] * sys.E.T)
            blocks.append(_pin_symmetric(Z[k][ip, ip], nu[k] * np.eye(n_p)))
            blocks.append(Z[k][iw, ip] == 0)
            blocks.append(Z[k][iq, ix] == -(sys.C @ Q[k] + sys.D @ Y[k]))
            blocks.append(Z[k][iq, ip] == 0)
            blocks.append(Z[k][iq, iw] == -sys.G)
            blocks.append(_pin_symmetric(Z[k][iq, iq], (nu[k] / gamma_k ** 2) * np.eye(n_q)))
        families["bounds"].append(nu[k] >= eps)
        families["bounds"].append(c[k] >= eps)
        if problem.q_min > 0:
            families["bounds"].append(Q[k] >> problem.q_min * np.eye(n_x))

    lower = lower_triangle_indices(n_x)
    for T in transitions:
        k = T.interval
        prediction = (
            T.A_q[lower] @ cp.vec(Q[k], order="F")
            + T.B_minus[lower] @ cp.vec(Y[k], order="F")
            + T.B_plus[lower] @ cp.vec(Y[k + 1], order="F")
            + T.S_minus[lower] @ cp.vec(Z[k][ix, ix], order="F")
            + T.S_plus[lower] @ cp.vec(Z[k + 1][ix, ix], order="F")
        )
        families["shooting"].append(cp.vec(Q[k + 1], order="F")[lower] == prediction)

    states, inputs = problem.state_halfspaces, problem.input_halfspaces
    for k in range(n_nodes):
        for i in range(states.m):
            lmi = build_state_containment_lmi(
                Q[k], c[k], traj.x[k], states.a[k, i], states.b[k, i],
                node=k, constraint=i, label=states.labels[i],
            )
            families["state_containment"].append(psd(lmi, "state_containment", k))
        for j in range(inputs.m):
            lmi = build_input_containment_lmi(
                Q[k], Y[k], c[k], traj.u[k], inputs.a[k, j], inputs.b[k, j],
                node=k, constraint=j, label=inputs.labels[j],
            )
            families["input_containment"].append(psd(lmi, "input_containment", k))

    G_c, h_c = c_condition_rows(problem.alpha, times, eps, include_lower=False)
    if elastic:
        slacks["c_condition"] = cp.Variable(G_c.shape[0], nonneg=True, name="slack_c_condition")
        families["c_condition"].append(G_c @ c <= h_c + slacks["c_condition"])
    else:
        families["c_condition"].append(G_c @ c <= h_c)

    families["boundary_initial"].append(psd(Q[0] - c[0] * problem.Q_i, "boundary_initial", 0))
    families["boundary_final"].append(psd(c[n_nodes - 1] * problem.Q_f - Q[n_nodes - 1], "boundary_final", 0))

    if elastic:
        for k in range(n_nodes):
            families["bounds"].append(vQ[k] * np.eye(n_x) - Q[k] >> 0)
        objective = sum(ELASTIC_WEIGHTS[name] * cp.sum(s) for name, s in slacks.items())
        cp_problem = cp.Problem(cp.Minimize(objective), [con for group in families.values() for con in group])
    else:
        cost, epigraph = build_objective(Q, c[0], vQ, problem, traj.t_0, traj.t_f)
        families["objective"] = epigraph
        cp_problem = cp.Problem(cp.Minimize(cost), [con for group in families.values() for con in group])

    program = ConicProgram(
        problem=cp_problem, variables=variables, families=families,
        n_nodes=n_nodes, n_x=n_x, n_u=n_u, n_z=n_z, elastic=elastic, slacks=slacks,
    )
    logger.info(
        "Assembled %s program: %d nodes, %d scalars, %d constraints",
        "elastic" if elastic else "synthesis", n_nodes, program.scalar_count(),
        len(cp_problem.constraints),
    )
    return program


__all__ = ["ConicProgram", "assemble", "RELAXABLE_FAMILIES", "ELASTIC_WEIGHTS"]
