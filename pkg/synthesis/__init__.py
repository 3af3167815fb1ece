"""Funnel synthesis: LMI assembly, discretization, conic program and solve."""

from .discretization import (
    DiscreteTransition,
    VectorizedOde,
    build_vectorized_ode,
    commutation_matrix,
    discretize_trajectory,
    foh_discretize,
    interpolate_A_B,
)
from .funnel import ContinuousFunnel, diagnose_infeasibility, extract_gains, reconstruct_continuous, solve
from .lmi import (
    build_c_condition,
    build_H,
    build_halfspaces,
    build_input_containment_lmi,
    build_objective,
    build_state_containment_lmi,
    funnel_entry_log_volume,
    linearize_obstacle,
    logdet_epigraph,
)
from .pipeline import FunnelSetup, PreparedSynthesis, prepare, synthesize
from .program import ConicProgram, assemble

__all__ = [
    "build_H",
    "build_state_containment_lmi",
    "build_input_containment_lmi",
    "build_c_condition",
    "build_objective",
    "build_halfspaces",
    "linearize_obstacle",
    "logdet_epigraph",
    "funnel_entry_log_volume",
    "commutation_matrix",
    "build_vectorized_ode",
    "VectorizedOde",
    "interpolate_A_B",
    "foh_discretize",
    "DiscreteTransition",
    "discretize_trajectory",
    "ConicProgram",
    "assemble",
    "solve",
    "extract_gains",
    "reconstruct_continuous",
    "ContinuousFunnel",
    "diagnose_infeasibility",
    "FunnelSetup",
    "PreparedSynthesis",
    "prepare",
    "synthesize",
]
