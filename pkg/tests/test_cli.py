"""Tests for the run configuration and the funnel command line."""

import csv
import json
import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np

from cli import main, parse_config
from cli.commands import EXIT_ERROR, EXIT_OK, build_parser, ellipse_parameters, parse_pair
from cli.config import load_config
from errors import ConfigValidationError
from models.report import DisturbancePolicy
from solvers import SolverBackend

REPO = Path(__file__).resolve().parent.parent
BENCHMARK = REPO / "configs" / "unicycle_benchmark.toml"


def read_rows(path: Path):
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        return header, np.array([[float(v) for v in row] for row in reader])


def benchmark_data() -> dict:
    return load_config(BENCHMARK).dict()


class TestRunConfig(unittest.TestCase):

    def test_shipped_benchmark(self):
        config = load_config(BENCHMARK)
        self.assertEqual(config.system, "unicycle")
        self.assertEqual(config.trajectory.N, 30)
        self.assertEqual(config.funnel.alpha, 0.7)
        self.assertEqual(config.solver.backend, SolverBackend.CLARABEL)
        self.assertEqual(config.validation.policy, DisturbancePolicy.PIECEWISE_CONSTANT)
        setup = config.funnel_setup()
        self.assertEqual([o.label for o in setup.obstacles], ["obstacle-1", "obstacle-2"])
        self.assertEqual(setup.Q_i.shape, (3, 3))

    def test_all_errors_reported(self):
        data = benchmark_data()
        data["funnel"]["alpha"] = -1.0
        data["validation"]["points_per_interval"] = 5
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_config(data)
        self.assertIn("funnel.alpha", ctx.exception.fields)
        self.assertIn("validation.points_per_interval", ctx.exception.fields)
        self.assertIn("funnel.alpha", str(ctx.exception))

    def test_unknown_system_and_dimensions(self):
        data = benchmark_data()
        data["system"] = "quadrotor"
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_config(data)
        self.assertIn("system", ctx.exception.fields)

        data = benchmark_data()
        data["funnel"]["Q_i"] = [[1.0, 0.0], [0.0, 1.0]]
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_config(data)
        self.assertIn("funnel.Q_i must be 3x3", str(ctx.exception))

    def test_non_spd_boundary(self):
        data = benchmark_data()
        data["funnel"]["Q_f"] = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_config(data)
        self.assertIn("funnel.Q_f", ctx.exception.fields)

    def test_json_round_trip(self):
        config = load_config(BENCHMARK)
        self.assertEqual(parse_config(json.loads(config.json())), config)

    def test_overrides(self):
        config = load_config(BENCHMARK, {"seed": 7, "solver.tolerance": 1e-6})
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.solver.tolerance, 1e-6)
        self.assertEqual(config.solver.max_iter, 500)

    def test_invalid_toml(self):
        scratch = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, scratch, True)
        path = scratch / "broken.toml"
        path.write_text("system = \n")
        with self.assertRaises(ConfigValidationError):
            load_config(path)


class TestParser(unittest.TestCase):

    def test_pair(self):
        self.assertEqual(parse_pair("0,2"), (0, 2))
        args = build_parser().parse_args(["plotdata", "--config", "c.toml", "--pair", "1,2"])
        self.assertEqual(args.pair, (1, 2))
        with self.assertRaises(SystemExit):
            build_parser().parse_args(["plotdata", "--config", "c.toml", "--pair", "x"])

    def test_flags(self):
        args = build_parser().parse_args(
            ["validate", "--config", "c.toml", "--seed", "3", "--dense-grid", "12", "--solver-tol", "1e-7"]
        )
        self.assertEqual((args.seed, args.dense_grid, args.solver_tol), (3, 12, 1e-7))

    def test_ellipse_parameters(self):
        major, minor, angle = ellipse_parameters(np.diag([4.0, 1.0]))
        self.assertAlmostEqual(major, 2.0)
        self.assertAlmostEqual(minor, 1.0)
        self.assertAlmostEqual(np.sin(angle), 0.0)


class TestCommandErrors(unittest.TestCase):

    def setUp(self):
        self.root = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.root, True)

    def test_missing_trajectory_file(self):
        text = BENCHMARK.read_text().replace('profile = "benchmark"', 'file = "missing.csv"')
        config = self.root / "run.toml"
        config.write_text(text)
        out = self.root / "out"
        self.assertEqual(main(["synthesize", "--config", str(config), "--out", str(out)]), EXIT_ERROR)
        self.assertFalse(out.exists())

    def test_invalid_configuration(self):
        text = BENCHMARK.read_text().replace("alpha = 0.7", "alpha = 0.0")
        config = self.root / "run.toml"
        config.write_text(text)
        out = self.root / "out"
        self.assertEqual(main(["synthesize", "--config", str(config), "--out", str(out)]), EXIT_ERROR)
        self.assertFalse(out.exists())

    def test_missing_funnel_file(self):
        out = self.root / "out"
        code = main(["validate", "--config", str(BENCHMARK), "--out", str(out)])
        self.assertEqual(code, EXIT_ERROR)


class TestBenchmarkRun(unittest.TestCase):
    """synthesize, validate and plotdata on the benchmark with 50 + 50 Monte-Carlo samples."""

    @classmethod
    def setUpClass(cls):
        cls.root = Path(tempfile.mkdtemp())
        text = BENCHMARK.read_text().replace("intersample = true", "intersample = false")
        cls.config = cls.root / "run.toml"
        cls.config.write_text(text)
        cls.out = cls.root / "out"
        cls.common = ["--config", str(cls.config), "--out", str(cls.out)]
        cls.synthesize_code = main(["synthesize"] + cls.common)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.root, ignore_errors=True)

    def test_synthesize(self):
        self.assertEqual(self.synthesize_code, EXIT_OK)
        for name in ("funnel.json", "nominal.csv", "manifest.json"):
            self.assertTrue((self.out / name).exists(), name)
        manifest = json.loads((self.out / "manifest.json").read_text())
        self.assertEqual(manifest["command"], "synthesize")
        self.assertEqual(manifest["status"], "optimal")
        self.assertEqual(len(manifest["config_hash"]), 64)
        header, rows = read_rows(self.out / "nominal.csv")
        self.assertEqual(header, ["t", "x1", "x2", "x3", "u1", "u2"])
        self.assertEqual(rows.shape, (31, 6))

    def test_validate_is_deterministic(self):
        self.assertEqual(main(["validate", "--seed", "5"] + self.common), EXIT_OK)
        first = (self.out / "report.json").read_bytes()
        self.assertEqual(main(["validate", "--seed", "5"] + self.common), EXIT_OK)
        self.assertEqual((self.out / "report.json").read_bytes(), first)
        report = json.loads(first)
        self.assertTrue(report["passed"])
        self.assertEqual(len(report["dlmi_residuals"]), 31)
        self.assertEqual(report["monte_carlo"]["n_passed"], 100)
        self.assertEqual((report["monte_carlo"]["n_E"], report["monte_carlo"]["n_Ec"]), (50, 50))
        self.assertIn("verdict: PASS", (self.out / "report.txt").read_text())
        header, traces = read_rows(self.out / "mc_traces.csv")
        self.assertEqual(header, ["sample", "kind", "t", "V"])
        self.assertEqual(set(traces[:, 0]), set(float(i) for i in range(100)))

    def test_plotdata(self):
        self.assertEqual(main(["plotdata", "--pair", "0,1", "--dense-grid", "10"] + self.common), EXIT_OK)
        sol = json.loads((self.out / "funnel.json").read_text())

        header, ellipses = read_rows(self.out / "ellipses.csv")
        self.assertEqual(header[:3], ["t", "x1", "x2"])
        self.assertEqual(ellipses.shape[0], 31)
        self.assertTrue(np.all(ellipses[:, 6] >= ellipses[:, 7]))

        _, inverse_c = read_rows(self.out / "inverse_c.csv")
        self.assertAlmostEqual(inverse_c[0, 1], 1.0 / sol["c"][0])
        self.assertTrue(np.all(inverse_c[:, 1] >= 1.0 - 1e-9))

        header, inputs = read_rows(self.out / "input_funnel.csv")
        self.assertEqual(header[:4], ["t", "u1", "u1_lower", "u1_upper"])
        nodes = inputs[::10]
        self.assertEqual(nodes.shape[0], 31)
        self.assertTrue(np.all(nodes[:, 2] >= -1e-6))
        self.assertTrue(np.all(nodes[:, 3] <= 2.0 + 1e-6))

    def test_plotdata_invalid_pair(self):
        plots = self.root / "plots"
        code = main([
            "plotdata", "--pair", "0,5", "--config", str(self.config), "--out", str(plots),
            "--funnel", str(self.out / "funnel.json"),
        ])
        self.assertEqual(code, EXIT_ERROR)
        self.assertFalse(plots.exists())

    def test_validate_rejects_other_grid(self):
        other = self.root / "longer.toml"
        other.write_text(self.config.read_text().replace("t_f = 5.0", "t_f = 6.0"))
        reports = self.root / "reports"
        with self.assertLogs("cli", level="ERROR") as logs:
            code = main([
                "validate", "--config", str(other), "--out", str(reports),
                "--funnel", str(self.out / "funnel.json"),
            ])
        self.assertEqual(code, EXIT_ERROR)
        self.assertFalse(reports.exists())
        self.assertIn("t_f=6", "\n".join(logs.output))


if __name__ == '__main__':
    unittest.main()
