"""
Command-line front end: synthesize, validate and plotdata.

Exit codes: 0 on success (optimal funnel, or all asserted validation
checks passed), 2 when the synthesis problem is infeasible, 1 on any error
or validation failure. Verbosity follows the FUNNEL_LOG variable.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from dynamics.nominal import dense_nominal
from errors import ConfigValidationError, FunnelError, InvalidArgumentError
from models.solution import FunnelSolution
from models.trajectory import NominalTrajectory
from storage import (
    RunManifest,
    atomic_output,
    read_funnel,
    write_funnel,
    write_manifest,
    write_report_json,
    write_report_text,
    write_series_csv,
    write_trajectory_csv,
)
from storage import config_hash as hash_config
from synthesis.funnel import ContinuousFunnel
from synthesis.pipeline import PreparedSynthesis, prepare, synthesize
from utils.logging_utils import configure_logging
from validation import run_validation
from validation.checks import dense_times, project_funnel_2d

from .config import RunConfig, load_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

FUNNEL_FILE = "funnel.json"


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.solver_tol is not None:
        overrides["solver.tolerance"] = args.solver_tol
    if args.dense_grid is not None:
        overrides["validation.points_per_interval"] = args.dense_grid
    return overrides


def _load(args: argparse.Namespace) -> Tuple[RunConfig, Path]:
    config = load_config(args.config, _overrides(args))
    out = Path(args.out) if args.out else Path(config.output)
    return config, out


def _funnel_path(args: argparse.Namespace, out: Path) -> Path:
    return Path(args.funnel) if args.funnel else out / FUNNEL_FILE


def _prepare_from_funnel(config: RunConfig, sol: FunnelSolution) -> PreparedSynthesis:
    """Rebuild the synthesis data around the nominal stored in a funnel file.

    The Lipschitz constants of the file are reused as they are, so the checks
    see exactly the problem that was solved.

    Raises:
        InvalidArgumentError: If the configured time grid differs from the
            grid of the funnel file
    """
    grid = config.trajectory
    if grid.file is None:
        stored = (sol.N, sol.t_0, sol.t_f)
        configured = (grid.N, grid.t_0, grid.t_f)
        if stored[0] != configured[0] or not np.allclose(stored[1:], configured[1:], rtol=0.0, atol=1e-9):
            raise InvalidArgumentError(
                f"funnel file grid (N={sol.N}, t_0={sol.t_0:g}, t_f={sol.t_f:g}) differs from the configured "
                f"grid (N={grid.N}, t_0={grid.t_0:g}, t_f={grid.t_f:g})"
            )
    system = config.build_system()
    traj = NominalTrajectory(t_0=sol.t_0, t_f=sol.t_f, x=sol.x_bar, u=sol.u_bar)
    return prepare(system, traj, config.funnel_setup(), gamma=sol.gamma, discretize=False)


def cmd_synthesize(args: argparse.Namespace) -> int:
    """Synthesize a funnel and write funnel.json, nominal.csv and manifest.json."""
    config, out = _load(args)
    system = config.build_system()
    traj = config.build_trajectory(system, base_dir=Path(args.config).parent)
    with atomic_output(out) as staging:
        prepared, outcome = synthesize(system, traj, config.funnel_setup(), config.solver)
        write_trajectory_csv(staging / "nominal.csv", traj)
        outputs = ["nominal.csv"]
        if outcome.solution is not None:
            write_funnel(staging / FUNNEL_FILE, outcome.solution)
            outputs.append(FUNNEL_FILE)
            code = EXIT_OK
        else:
            assert outcome.infeasibility is not None
            write_report_json(staging / "infeasibility.json", outcome.infeasibility)
            outputs.append("infeasibility.json")
            logger.error("Synthesis infeasible: %s", outcome.infeasibility.message)
            code = EXIT_INFEASIBLE
        write_manifest(staging / "manifest.json", RunManifest(
            command="synthesize",
            config_hash=hash_config(config.canonical()),
            seed=config.seed,
            status=outcome.status.value,
            timings=prepared.timings,
            outputs=outputs,
        ))
    logger.info("synthesize finished with status %s in %s", outcome.status.value, out)
    return code


def cmd_validate(args: argparse.Namespace) -> int:
    """Validate a funnel file; writes report.json, report.txt and mc_traces.csv."""
    config, out = _load(args)
    sol = read_funnel(_funnel_path(args, out))
    prepared = _prepare_from_funnel(config, sol)
    funnel = ContinuousFunnel(sol, prepared.system, prepared.nominal)
    settings = config.validation
    report = run_validation(
        config.build_system(), prepared.system, sol, prepared.problem, prepared.linearization, funnel,
        seed=config.seed,
        n_E=settings.n_E,
        n_Ec=settings.n_Ec,
        policy=settings.policy,
        points_per_interval=settings.points_per_interval,
        mc_tolerance=settings.tolerance,
        intersample=settings.intersample,
    )
    with atomic_output(out) as staging:
        write_report_json(staging / "report.json", report)
        write_report_text(staging / "report.txt", report)
        rows: List[List[float]] = []
        if report.monte_carlo is not None:
            for sample in report.monte_carlo.samples:
                kind = 0.0 if sample.kind == "E" else 1.0
                rows.extend([float(sample.index), kind, t, v] for t, v in zip(sample.times, sample.V))
        write_series_csv(staging / "mc_traces.csv", ["sample", "kind", "t", "V"], rows)
    sys.stdout.write(f"validation {'passed' if report.passed else 'FAILED'}\n")
    for failure in report.failures():
        sys.stdout.write(f"  {failure}\n")
    return EXIT_OK if report.passed else EXIT_ERROR


def parse_pair(value: str) -> Tuple[int, int]:
    """Parse 'i,j' into a coordinate pair."""
    try:
        i, j = (int(part) for part in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'i,j', got {value!r}") from None
    return i, j


def ellipse_parameters(shape: np.ndarray) -> Tuple[float, float, float]:
    """Semi-axes and orientation (radians) of {d : d^T shape^{-1} d <= 1}."""
    eigenvalues, vectors = np.linalg.eigh(shape)
    major, minor = np.sqrt(np.maximum(eigenvalues[::-1], 0.0))
    angle = float(np.arctan2(vectors[1, -1], vectors[0, -1]))
    return float(major), float(minor), angle


def ellipse_series(funnel: ContinuousFunnel, pair: Sequence[int]) -> np.ndarray:
    """One row per node: t, center, shape entries, semi-axes and angle of the projected funnel."""
    sol = funnel.solution
    i, j = pair
    rows = []
    for k, t in enumerate(sol.times):
        shape = project_funnel_2d(funnel, pair, float(t))
        major, minor, angle = ellipse_parameters(shape)
        rows.append([
            t, sol.x_bar[k, i], sol.x_bar[k, j], shape[0, 0], shape[0, 1], shape[1, 1], major, minor, angle,
        ])
    return np.array(rows)


def input_funnel_series(funnel: ContinuousFunnel, points_per_interval: int) -> Tuple[List[str], np.ndarray]:
    """u_bar_j -/+ sqrt(e_j^T K Q K^T e_j / c) for each input on the dense grid."""
    sol = funnel.solution
    header = ["t"]
    for j in range(sol.n_u):
        header += [f"u{j + 1}", f"u{j + 1}_lower", f"u{j + 1}_upper"]
    rows = []
    for t in dense_times(sol, points_per_interval):
        Q, _, c, K = funnel.evaluate(float(t))
        u_bar = funnel.nominal.input(float(t))
        spread = np.sqrt(np.maximum(np.diag(K @ Q @ K.T), 0.0) / c)
        row = [float(t)]
        for j in range(sol.n_u):
            row += [u_bar[j], u_bar[j] - spread[j], u_bar[j] + spread[j]]
        rows.append(row)
    return header, np.array(rows)


def inverse_c_series(sol: FunnelSolution, points_per_interval: int) -> np.ndarray:
    return np.array([[t, 1.0 / sol.c_at(float(t))] for t in dense_times(sol, points_per_interval)])


def cmd_plotdata(args: argparse.Namespace) -> int:
    """Write ellipses.csv, input_funnel.csv and inverse_c.csv for external plotting."""
    config, out = _load(args)
    sol = read_funnel(_funnel_path(args, out))
    pair = args.pair
    if pair[0] == pair[1] or min(pair) < 0 or max(pair) >= sol.n_x:
        raise InvalidArgumentError(f"invalid coordinate pair {pair} for a {sol.n_x}-dimensional state")
    system = config.build_system()
    traj = NominalTrajectory(t_0=sol.t_0, t_f=sol.t_f, x=sol.x_bar, u=sol.u_bar)
    funnel = ContinuousFunnel(sol, system, dense_nominal(system, traj))
    points = config.validation.points_per_interval
    i, j = pair
    with atomic_output(out) as staging:
        write_series_csv(
            staging / "ellipses.csv",
            ["t", f"x{i + 1}", f"x{j + 1}", "shape_11", "shape_12", "shape_22", "major", "minor", "angle"],
            ellipse_series(funnel, pair),
        )
        header, rows = input_funnel_series(funnel, points)
        write_series_csv(staging / "input_funnel.csv", header, rows)
        write_series_csv(staging / "inverse_c.csv", ["t", "inverse_c"], inverse_c_series(sol, points))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="funnel", description="Invariant funnel synthesis and validation")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", required=True, help="TOML run configuration")
        sub.add_argument("--out", default=None, help="Output directory (default: the configured one)")
        sub.add_argument("--seed", type=int, default=None, help="Override the validation seed")
        sub.add_argument("--dense-grid", type=int, default=None, help="Dense points per interval")
        sub.add_argument("--solver-tol", type=float, default=None, help="Override the solver tolerance")

    synth = commands.add_parser("synthesize", help="Synthesize a funnel")
    add_common(synth)
    synth.set_defaults(handler=cmd_synthesize)

    validate = commands.add_parser("validate", help="Validate a funnel file")
    add_common(validate)
    validate.add_argument("--funnel", default=None, help="Funnel file (default: <out>/funnel.json)")
    validate.set_defaults(handler=cmd_validate)

    plot = commands.add_parser("plotdata", help="Export plot series of a funnel file")
    add_common(plot)
    plot.add_argument("--funnel", default=None, help="Funnel file (default: <out>/funnel.json)")
    plot.add_argument("--pair", type=parse_pair, default=(0, 1), help="State coordinates 'i,j' to project on")
    plot.set_defaults(handler=cmd_plotdata)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return int(args.handler(args))
    except ConfigValidationError as error:
        sys.stderr.write(f"{error}\n")
        return EXIT_ERROR
    except (FunnelError, OSError) as error:
        logger.error("%s failed: %s", args.command, error)
        sys.stderr.write(f"error: {error}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
