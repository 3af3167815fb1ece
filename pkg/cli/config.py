"""Run configuration read from TOML.

Example:
    config = load_config("configs/unicycle_benchmark.toml")
    setup = config.funnel_setup()
    solver = config.solver

Every field is validated in one pass; all offending fields are reported
together in a ConfigValidationError.
"""

import math
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, root_validator, validator

from dynamics import SYSTEMS, create_system
from dynamics.nominal import integrate_nominal
from dynamics.system_model import DEFAULT_INFLATION, DEFAULT_LIPSCHITZ_SAMPLES
from dynamics.unicycle import benchmark_inputs
from errors import ConfigValidationError
from models.problem import EllipsoidalObstacle
from models.report import DisturbancePolicy
from models.system import NonlinearSystem
from models.trajectory import InputSchedule, NominalTrajectory
from solvers import SolverConfig
from storage import read_trajectory_csv
from synthesis.pipeline import FunnelSetup

Matrix = List[List[float]]


def _is_spd(matrix: Matrix) -> bool:
    value = np.asarray(matrix, dtype=float)
    if value.ndim != 2 or value.shape[0] != value.shape[1]:
        return False
    if not np.allclose(value, value.T):
        return False
    return bool(np.linalg.eigvalsh(0.5 * (value + value.T))[0] > 0)


class TrajectoryConfig(BaseModel):
    """Where the nominal trajectory comes from.

    Either ``file`` (a ``t,x1..xn,u1..um`` CSV) or a generator: ``x_0`` with
    an input profile, integrated over N uniform intervals.
    """
    file: Optional[str] = Field(default=None, description="Trajectory CSV; overrides the generator")
    N: int = Field(default=30, ge=1, description="Number of intervals")
    t_0: float = Field(default=0.0, description="Initial time")
    t_f: float = Field(default=5.0, description="Final time")
    x_0: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0], description="Initial nominal state")
    profile: str = Field(default="benchmark", description="'benchmark' or 'knots'")
    knot_times: List[float] = Field(default_factory=list, description="Input knot times for profile 'knots'")
    knot_values: Matrix = Field(default_factory=list, description="Input values at the knots")

    @validator("profile")
    def _profile(cls, value: str) -> str:
        if value not in ("benchmark", "knots"):
            raise ValueError("profile must be 'benchmark' or 'knots'")
        return value

    @root_validator(skip_on_failure=True)
    def _check(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["t_f"] <= values["t_0"]:
            raise ValueError("t_f must be greater than t_0")
        if values["file"] is None and values["profile"] == "knots":
            times, knots = values["knot_times"], values["knot_values"]
            if not times or len(times) != len(knots):
                raise ValueError("knot_times and knot_values must be nonempty and of equal length")
        return values


class FunnelConfig(BaseModel):
    """Synthesis parameters."""
    alpha: float = Field(default=0.7, gt=0, description="Lyapunov decay rate")
    lambda_w: float = Field(default=0.5, gt=0, description="Disturbance multiplier")
    w_c: float = Field(default=1e3, gt=0, description="Weight on c_0")
    w_Q0: float = Field(default=0.1, gt=0, description="Weight on -log det Q_0")
    w_Qbar: float = Field(default=0.1, gt=0, description="Running weight on the max eigenvalue of Q")
    Q_i: Matrix = Field(description="Initial boundary matrix")
    Q_f: Matrix = Field(description="Final boundary matrix")
    q_min: float = Field(default=0.0, ge=0, description="Floor on lambda_min(Q_k); 0 disables it")

    @validator("Q_i", "Q_f")
    def _spd(cls, value: Matrix) -> Matrix:
        if not _is_spd(value):
            raise ValueError("must be a symmetric positive definite matrix")
        return value


class ObstacleConfig(BaseModel):
    center: List[float] = Field(description="Center in the selected coordinates")
    shape: Matrix = Field(description="Matrix S of ||S (p - center)|| < 1")
    coordinates: List[int] = Field(default_factory=lambda: [0, 1], description="State indices")
    label: str = Field(default="obstacle", description="Name used in reports")


class ConstraintConfig(BaseModel):
    obstacles: List[ObstacleConfig] = Field(default_factory=list)
    input_lower: Optional[List[float]] = Field(default=None, description="Lower input bounds (-inf allowed)")
    input_upper: Optional[List[float]] = Field(default=None, description="Upper input bounds (inf allowed)")

    @root_validator(skip_on_failure=True)
    def _check(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        lower, upper = values["input_lower"], values["input_upper"]
        if lower is not None and upper is not None:
            if len(lower) != len(upper):
                raise ValueError("input_lower and input_upper must have the same length")
            if any(lo >= up for lo, up in zip(lower, upper)):
                raise ValueError("input_lower must be below input_upper")
        return values


class LipschitzConfig(BaseModel):
    samples: int = Field(default=DEFAULT_LIPSCHITZ_SAMPLES, ge=2, description="Samples per node")
    inflation: float = Field(default=DEFAULT_INFLATION, ge=1.0, description="Safety factor on the sampled maximum")
    seed: int = Field(default=0, ge=0, description="Sampling seed")


class ValidationConfig(BaseModel):
    n_E: int = Field(default=50, ge=0, description="Samples on the boundary of E(t_0)")
    n_Ec: int = Field(default=50, ge=0, description="Samples on the boundary of E_c(t_0)")
    policy: DisturbancePolicy = Field(default=DisturbancePolicy.PIECEWISE_CONSTANT)
    points_per_interval: int = Field(default=20, ge=10, description="Dense grid resolution")
    tolerance: float = Field(default=1e-3, gt=0, description="Relative Monte-Carlo tolerance")
    intersample: bool = Field(default=True, description="Attach inter-sample diagnostics")


class RunConfig(BaseModel):
    """Complete configuration of a synthesis and validation run."""
    system: str = Field(default="unicycle", description="Name of a built-in system")
    seed: int = Field(default=0, ge=0, description="Disturbance seed of the validation")
    output: str = Field(default="out", description="Output directory")
    trajectory: TrajectoryConfig = Field(default_factory=TrajectoryConfig)
    funnel: FunnelConfig
    constraints: ConstraintConfig = Field(default_factory=ConstraintConfig)
    lipschitz: LipschitzConfig = Field(default_factory=LipschitzConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    validation: ValidationConfig = Field(default_factory=ValidationConfig)

    @validator("system")
    def _known_system(cls, value: str) -> str:
        if value not in SYSTEMS:
            raise ValueError(f"unknown system; available: {sorted(SYSTEMS)}")
        return value

    @root_validator(skip_on_failure=True)
    def _dimensions(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        sys = create_system(values["system"])
        problems: List[str] = []
        funnel: FunnelConfig = values["funnel"]
        for name in ("Q_i", "Q_f"):
            if len(getattr(funnel, name)) != sys.n_x:
                problems.append(f"funnel.{name} must be {sys.n_x}x{sys.n_x}")
        traj: TrajectoryConfig = values["trajectory"]
        if traj.file is None:
            if len(traj.x_0) != sys.n_x:
                problems.append(f"trajectory.x_0 must have {sys.n_x} entries")
            if traj.profile == "knots" and any(len(row) != sys.n_u for row in traj.knot_values):
                problems.append(f"trajectory.knot_values rows must have {sys.n_u} entries")
        constraints: ConstraintConfig = values["constraints"]
        for name in ("input_lower", "input_upper"):
            bounds = getattr(constraints, name)
            if bounds is not None and len(bounds) != sys.n_u:
                problems.append(f"constraints.{name} must have {sys.n_u} entries")
        for i, obstacle in enumerate(constraints.obstacles):
            if any(c < 0 or c >= sys.n_x for c in obstacle.coordinates):
                problems.append(f"constraints.obstacles[{i}].coordinates out of range")
        if problems:
            raise ValueError("; ".join(problems))
        return values

    def build_system(self) -> NonlinearSystem:
        return create_system(self.system)

    def input_schedule(self) -> InputSchedule:
        traj = self.trajectory
        if traj.profile == "benchmark":
            return benchmark_inputs(traj.t_0, traj.t_f)
        return InputSchedule(times=traj.knot_times, values=traj.knot_values)

    def build_trajectory(self, sys: NonlinearSystem, base_dir: Optional[Path] = None) -> NominalTrajectory:
        """Read the trajectory file or integrate the generator.

        Raises:
            OSError: If the trajectory file cannot be read
        """
        traj = self.trajectory
        if traj.file is not None:
            path = Path(traj.file)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return read_trajectory_csv(path, sys.n_x)
        return integrate_nominal(sys, np.asarray(traj.x_0), self.input_schedule(), traj.t_0, traj.t_f, traj.N)

    def funnel_setup(self) -> FunnelSetup:
        constraints = self.constraints
        return FunnelSetup(
            alpha=self.funnel.alpha,
            lambda_w=self.funnel.lambda_w,
            w_c=self.funnel.w_c,
            w_Q0=self.funnel.w_Q0,
            w_Qbar=self.funnel.w_Qbar,
            Q_i=self.funnel.Q_i,
            Q_f=self.funnel.Q_f,
            q_min=self.funnel.q_min,
            obstacles=[EllipsoidalObstacle(**obstacle.dict()) for obstacle in constraints.obstacles],
            input_lower=constraints.input_lower,
            input_upper=constraints.input_upper,
            lipschitz_samples=self.lipschitz.samples,
            lipschitz_inflation=self.lipschitz.inflation,
            lipschitz_seed=self.lipschitz.seed,
        )

    def canonical(self) -> Dict[str, Any]:
        """JSON-compatible dict; non-finite bounds become strings."""
        return _finite_safe(self.dict())


def _finite_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _finite_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_safe(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if hasattr(value, "value"):
        return value.value
    return value


def _error_list(error: ValidationError) -> List[Tuple[str, str]]:
    errors = []
    for entry in error.errors():
        location = ".".join(str(part) for part in entry["loc"] if part != "__root__")
        errors.append((location or "config", entry["msg"]))
    return errors


def parse_config(data: Mapping[str, Any]) -> RunConfig:
    """Validate a configuration mapping.

    Raises:
        ConfigValidationError: Listing every offending field
    """
    try:
        return RunConfig.parse_obj(data)
    except ValidationError as error:
        raise ConfigValidationError(_error_list(error)) from error


def load_config(path: Union[str, Path], overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Read a TOML run configuration.

    Args:
        path: TOML file
        overrides: Top-level keys replacing the file values (CLI flags)

    Raises:
        ConfigValidationError: If the file is not valid TOML or any field is invalid
        OSError: If the file cannot be read
    """
    with open(path, "rb") as handle:
        try:
            data = tomllib.load(handle)
        except tomllib.TOMLDecodeError as error:
            raise ConfigValidationError([("config", f"invalid TOML: {error}")]) from error
    for key, value in (overrides or {}).items():
        section, _, name = key.partition(".")
        if name:
            data.setdefault(section, {})[name] = value
        else:
            data[section] = value
    return parse_config(data)
