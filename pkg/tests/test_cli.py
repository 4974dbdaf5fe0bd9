#!/usr/bin/env python3
"""
Tests for the command line interface and the experiment runner.
"""

import io
import os
import tempfile
import unittest
import sys
from contextlib import redirect_stdout
from pathlib import Path
from unittest import mock

# Add the parent directory to the path so we can import the module
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from wacc import runner
from wacc.cli import main
from wacc.config import SEED_ENV, ExperimentConfig
from wacc.errors import SolverStall
from wacc.records import ExperimentRecord

BOUNDS_ARGS = ["bounds", "--widths", "0", "10", "8", "12", "--jobs", "1"]


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.env = mock.patch.dict(os.environ)
        self.env.start()
        os.environ.pop(SEED_ENV, None)

    def tearDown(self):
        self.env.stop()
        self.tmp.cleanup()

    def run_main(self, *argv):
        out = io.StringIO()
        with redirect_stdout(out):
            code = main(["-q", *argv])
        return code, out.getvalue()

    def measures(self, path):
        (record,) = ExperimentRecord.read(path)
        return [(row.label, row.measures) for row in record.rows]


class TestExperiments(CliTestCase):
    """Test cases for running experiments end to end"""

    def test_bounds(self):
        path = self.dir / "bounds.csv"
        code, output = self.run_main(*BOUNDS_ARGS, "--seed", "1", "--out", str(path))
        self.assertEqual(code, 0)
        self.assertIn("bounds summary:bcl", output)
        rows = dict(self.measures(path))
        self.assertAlmostEqual(rows["summary:bcl"]["bound"], 0.1)
        self.assertAlmostEqual(rows["summary:keybound"]["a"], 15.0)
        self.assertAlmostEqual(rows["summary:limit"]["limit"], 2.3204, places=3)
        self.assertIn("laplace:1000", rows)

    def test_same_seed_same_rows(self):
        first, second = self.dir / "a.json", self.dir / "b.json"
        args = ["conic", "--trials", "1000", "--n", "2", "--jobs", "1", "--seed", "3"]
        self.assertEqual(self.run_main(*args, "--out", str(first))[0], 0)
        self.assertEqual(self.run_main(*args, "--out", str(second))[0], 0)
        self.assertEqual(self.measures(first), self.measures(second))

    def test_worker_count_does_not_change_results(self):
        serial, parallel = self.dir / "serial.csv", self.dir / "parallel.csv"
        args = ["spectra", "--trials", "60", "--n", "5", "--seed", "9"]
        self.assertEqual(self.run_main(*args, "--jobs", "1", "--out", str(serial))[0], 0)
        self.assertEqual(self.run_main(*args, "--jobs", "2", "--out", str(parallel))[0], 0)
        self.assertEqual(self.measures(serial), self.measures(parallel))

    def test_seed_environment(self):
        path = self.dir / "env.csv"
        os.environ[SEED_ENV] = "42"
        self.assertEqual(self.run_main(*BOUNDS_ARGS, "--seed", "1", "--out", str(path))[0], 0)
        (record,) = ExperimentRecord.read(path)
        self.assertEqual(record.seed, 42)

    def test_config_file(self):
        config = self.dir / "cones.json"
        config.write_text('{"cone_specs": ["orthant:4"], "trials": 500, "jobs": 1}', encoding="utf-8")
        path = self.dir / "cones.csv"
        self.assertEqual(self.run_main("cones", "--config", str(config), "--out", str(path))[0], 0)
        labels = [label for label, _ in self.measures(path)]
        self.assertEqual(labels, ["summary:orthant:4"])


class TestExitCodes(CliTestCase):
    def test_config_error(self):
        self.assertEqual(self.run_main("power", "--epsilon", "2")[0], 2)
        self.assertEqual(self.run_main("renegar", "--cone-c", "cube:2")[0], 2)

    def test_library_error(self):
        foreign = self.dir / "foreign.csv"
        foreign.write_text("a,b\n1,2\n", encoding="utf-8")
        self.assertEqual(self.run_main("report", str(foreign))[0], 1)

    def test_strict_stall(self):
        def stall(config, stream, mapper):
            raise SolverStall("restarts disagree")

        config = ExperimentConfig.resolve("power", {"jobs": 1}, environ={})
        with mock.patch.dict(runner.EXPERIMENTS, {"power": stall}):
            self.assertEqual(runner.run(config), runner.EXIT_STRICT)


class TestReport(CliTestCase):
    def test_report_pools_files(self):
        paths = []
        for seed in ("1", "2"):
            path = self.dir / f"bounds-{seed}.csv"
            self.assertEqual(self.run_main(*BOUNDS_ARGS, "--seed", seed, "--out", str(path))[0], 0)
            paths.append(str(path))
        code, output = self.run_main("report", *paths)
        self.assertEqual(code, 0)
        self.assertIn("== bounds ==", output)
        self.assertIn("summary:keybound", output)


if __name__ == "__main__":
    unittest.main()
