"""
This module handles file storage for funnel synthesis runs.

It reads and writes nominal trajectories (CSV), funnel solutions
(``funnel-v1`` JSON), validation reports, plot series and run manifests,
and stages every output of a command in a temporary directory so that a
failing run leaves nothing behind.
"""

import hashlib
import json
import logging
import os
import shutil
import tempfile
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Sequence, Union

import numpy as np

from errors import InvalidArgumentError, UnsupportedVersionError
from models.report import ValidationReport
from models.solution import FunnelSolution, InfeasibilityReport, SynthesisStatus
from models.trajectory import NominalTrajectory

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FUNNEL_VERSION = "funnel-v1"
MANIFEST_PACKAGES = ("numpy", "scipy", "cvxpy", "clarabel", "scs", "pydantic")
GRID_TOLERANCE = 1e-9


# Trajectories

def write_trajectory_csv(path: PathLike, traj: NominalTrajectory) -> None:
    """Write one row per node with header ``t,x1..xn,u1..um``."""
    header = ["t"] + [f"x{i + 1}" for i in range(traj.n_x)] + [f"u{j + 1}" for j in range(traj.n_u)]
    rows = np.column_stack([traj.times, traj.x, traj.u])
    np.savetxt(path, rows, delimiter=",", header=",".join(header), comments="", fmt="%.17g", encoding="utf-8")


def read_trajectory_csv(path: PathLike, n_x: int) -> NominalTrajectory:
    """Read a trajectory CSV written by write_trajectory_csv.

    Args:
        path: CSV file
        n_x: State dimension, splits the columns after ``t`` into x and u

    Raises:
        InvalidArgumentError: If the header or the grid is not as expected
        OSError: If the file cannot be read
    """
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
    if not header or header[0] != "t":
        raise InvalidArgumentError(f"{path}: first column must be 't'")
    n_u = len(header) - 1 - n_x
    expected = ["t"] + [f"x{i + 1}" for i in range(n_x)] + [f"u{j + 1}" for j in range(n_u)]
    if n_u < 1 or header != expected:
        raise InvalidArgumentError(f"{path}: expected header {','.join(expected)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, encoding="utf-8")
    times = data[:, 0]
    traj = NominalTrajectory(t_0=float(times[0]), t_f=float(times[-1]), x=data[:, 1:1 + n_x], u=data[:, 1 + n_x:])
    if float(np.max(np.abs(times - traj.times))) > GRID_TOLERANCE * max(1.0, abs(traj.t_f)):
        raise InvalidArgumentError(f"{path}: node times are not uniformly spaced")
    return traj


# Funnel files

def _matrix(value: np.ndarray) -> Dict[str, Any]:
    value = np.atleast_2d(np.asarray(value, dtype=float))
    return {"dims": list(value.shape), "data": value.reshape(-1).tolist()}


def _from_matrix(entry: Mapping[str, Any]) -> np.ndarray:
    dims = [int(d) for d in entry["dims"]]
    data = np.asarray(entry["data"], dtype=float)
    if data.size != int(np.prod(dims)):
        raise InvalidArgumentError(f"matrix data of size {data.size} does not match dims {dims}")
    return data.reshape(dims)


def _stack(values: Sequence[Mapping[str, Any]]) -> np.ndarray:
    return np.array([_from_matrix(entry) for entry in values])


def funnel_to_dict(sol: FunnelSolution) -> Dict[str, Any]:
    """Serializable ``funnel-v1`` document; matrices are row-major with explicit dims."""
    return {
        "version": FUNNEL_VERSION,
        "grid": {"t_0": sol.t_0, "t_f": sol.t_f, "N": sol.N},
        "nominal": {"x": _matrix(sol.x_bar), "u": _matrix(sol.u_bar)},
        "parameters": {"alpha": sol.alpha, "lambda_w": sol.lambda_w},
        "gamma": sol.gamma.tolist(),
        "Q": [_matrix(m) for m in sol.Q],
        "Y": [_matrix(m) for m in sol.Y],
        "K": [_matrix(m) for m in sol.K],
        "c": sol.c.tolist(),
        "nu": sol.nu.tolist(),
        "vQ": sol.vQ.tolist(),
        "Z": [_matrix(m) for m in sol.Z],
        "objective": sol.objective,
        "solver_status": sol.status.value,
        "warnings": list(sol.warnings),
    }


def funnel_from_dict(document: Mapping[str, Any]) -> FunnelSolution:
    """Inverse of funnel_to_dict.

    Raises:
        UnsupportedVersionError: If the document is not ``funnel-v1``
        InvalidArgumentError: If a field is missing or malformed
    """
    version = document.get("version")
    if version != FUNNEL_VERSION:
        raise UnsupportedVersionError(f"unsupported funnel file version {version!r}, expected {FUNNEL_VERSION!r}")
    try:
        grid = document["grid"]
        sol = FunnelSolution(
            t_0=grid["t_0"], t_f=grid["t_f"],
            Q=_stack(document["Q"]), Y=_stack(document["Y"]), K=_stack(document["K"]),
            c=document["c"], nu=document["nu"], vQ=document["vQ"], Z=_stack(document["Z"]),
            gamma=document["gamma"],
            alpha=document["parameters"]["alpha"], lambda_w=document["parameters"]["lambda_w"],
            x_bar=_from_matrix(document["nominal"]["x"]), u_bar=_from_matrix(document["nominal"]["u"]),
            status=SynthesisStatus(document["solver_status"]),
            objective=document["objective"],
            warnings=document.get("warnings", []),
        )
    except (KeyError, TypeError, ValueError) as error:
        raise InvalidArgumentError(f"malformed funnel document: {error}") from error
    if sol.N != int(grid["N"]):
        raise InvalidArgumentError(f"funnel document declares N={grid['N']} but holds {sol.N + 1} nodes")
    return sol


def write_funnel(path: PathLike, sol: FunnelSolution) -> None:
    Path(path).write_text(json.dumps(funnel_to_dict(sol), indent=2, sort_keys=True), encoding="utf-8")


def read_funnel(path: PathLike) -> FunnelSolution:
    """Load a ``funnel-v1`` JSON file.

    Raises:
        UnsupportedVersionError: If the version field is not ``funnel-v1``
        InvalidArgumentError: If the file is not valid JSON or misses fields
    """
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as error:
        raise InvalidArgumentError(f"{path}: not a JSON document ({error})") from error
    return funnel_from_dict(document)


# Reports and plot series

def write_report_json(path: PathLike, report: Union[ValidationReport, InfeasibilityReport]) -> None:
    Path(path).write_text(report.json(indent=2), encoding="utf-8")


def report_summary(report: ValidationReport) -> str:
    """Plain-text summary of a validation report."""
    lines = [
        f"verdict: {'PASS' if report.passed else 'FAIL'}",
        f"DLMI: max residual {max(report.dlmi_residuals):.3e} (tolerance {report.dlmi_tolerance:g})"
        f" -> {'ok' if report.dlmi_passed else 'violated'}",
    ]
    if report.containment:
        worst = min(report.containment, key=lambda r: r.residual)
        lines.append(
            f"containment: worst residual {worst.residual:.3e} at node {worst.node} ({worst.family}:{worst.label})"
            f" -> {'ok' if report.containment_passed else 'violated'}"
        )
    else:
        lines.append("containment: no constraints")
    lines.append(
        f"c(t) condition: worst residual {report.c_condition_worst:.3e}"
        f" -> {'ok' if report.c_condition_passed else 'violated'}"
    )
    mc = report.monte_carlo
    if mc is not None:
        lines.append(
            f"Monte-Carlo ({mc.policy.value}, seed {mc.seed}): {mc.n_passed}/{len(mc.samples)} samples passed"
        )
    if report.intersample is not None:
        d = report.intersample
        lines.append(
            f"inter-sample (informational): worst DLMI {d.worst_dlmi_residual:.3e} at t={d.worst_dlmi_time:.4f},"
            f" worst containment {d.worst_containment_residual:.3e} at t={d.worst_containment_time:.4f},"
            f" min eig Q {d.min_eig_Q:.3e}"
        )
    if report.metrics is not None:
        lines.append(f"entry log-volume: {report.metrics.entry_log_volume:.6f}")
    lines.extend(f"failure: {message}" for message in report.failures())
    return "\n".join(lines) + "\n"


def write_report_text(path: PathLike, report: ValidationReport) -> None:
    Path(path).write_text(report_summary(report), encoding="utf-8")


def write_series_csv(path: PathLike, header: Sequence[str], rows: Union[np.ndarray, Sequence[Sequence[float]]]) -> None:
    """Write a numeric series for external plotting."""
    data = np.atleast_2d(np.asarray(rows, dtype=float))
    if data.size and data.shape[1] != len(header):
        raise InvalidArgumentError(f"series has {data.shape[1]} columns but {len(header)} header names")
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt="%.17g", encoding="utf-8")


# Manifests

def config_hash(config: Mapping[str, Any]) -> str:
    """sha256 of the canonical JSON form of a configuration mapping."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def package_versions(packages: Sequence[str] = MANIFEST_PACKAGES) -> Dict[str, str]:
    versions = {}
    for name in packages:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not installed"
    return versions


@dataclass
class RunManifest:
    """Type-safe record of one command run."""
    command: str
    config_hash: str
    seed: int
    status: str
    versions: Dict[str, str] = field(default_factory=package_versions)
    timings: Dict[str, float] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)


def write_manifest(path: PathLike, manifest: RunManifest) -> None:
    Path(path).write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True), encoding="utf-8")


def read_manifest(path: PathLike) -> RunManifest:
    return RunManifest(**json.loads(Path(path).read_text(encoding="utf-8")))


@contextmanager
def atomic_output(directory: PathLike) -> Iterator[Path]:
    """Context manager for the output directory of a command.

    Files are written into a staging directory next to ``directory`` and
    moved into place when the block exits normally; on error the staging
    directory is removed and ``directory`` is left untouched.
    """
    target = Path(directory)
    target.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{target.name}-", dir=target.parent))
    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    target.mkdir(parents=True, exist_ok=True)
    for item in sorted(staging.iterdir()):
        os.replace(item, target / item.name)
    staging.rmdir()
    logger.debug("Committed outputs to %s", target)
