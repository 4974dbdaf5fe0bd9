#!/usr/bin/env python3
"""
Tests for experiment configuration resolution.
"""

import json
import math
import tempfile
import unittest
import sys
from pathlib import Path

# Add the parent directory to the path so we can import the module
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from wacc.config import SEED_ENV, ExperimentConfig, load_config_file
from wacc.errors import ConfigError


class TestResolve(unittest.TestCase):
    """Test cases for ExperimentConfig.resolve"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, data, name="config.json"):
        path = self.dir / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    def test_experiment_defaults(self):
        config = ExperimentConfig.resolve("power", environ={})
        self.assertEqual(config.trials, 500)
        self.assertEqual(config.n, 20)
        self.assertAlmostEqual(config.alpha, math.pi / 8)
        self.assertEqual(config.epsilon, 0.05)

        renegar = ExperimentConfig.resolve("renegar", environ={})
        self.assertEqual((renegar.cone_c, renegar.cone_d), ("orthant:50", "full:200"))

    def test_precedence(self):
        """flags > config file > experiment defaults"""
        path = self._write({"trials": 300, "n": 8, "seed": 11})
        config = ExperimentConfig.resolve("power", {"n": 12, "trials": None}, path, environ={})
        self.assertEqual(config.n, 12)
        self.assertEqual(config.trials, 300)
        self.assertEqual(config.seed, 11)
        self.assertEqual(config.epsilon, 0.05)

    def test_seed_environment_override(self):
        config = ExperimentConfig.resolve("power", {"seed": 3}, environ={SEED_ENV: "0x10"})
        self.assertEqual(config.seed, 16)
        with self.assertRaises(ConfigError):
            ExperimentConfig.resolve("power", environ={SEED_ENV: "seven"})

    def test_format_inferred_from_out(self):
        self.assertEqual(ExperimentConfig.resolve("power", {"out": "r.JSON"}, environ={}).format, "json")
        self.assertEqual(ExperimentConfig.resolve("power", {"out": "r.csv"}, environ={}).format, "csv")
        self.assertIsNone(ExperimentConfig.resolve("power", environ={}).format)

    def test_unknown_keys(self):
        path = self._write({"trails": 10})
        with self.assertRaises(ConfigError):
            ExperimentConfig.resolve("power", config_path=path, environ={})

    def test_bad_files(self):
        with self.assertRaises(ConfigError):
            load_config_file(str(self.dir / "missing.json"))
        broken = self.dir / "broken.json"
        broken.write_text("{not json", encoding="utf-8")
        with self.assertRaises(ConfigError):
            load_config_file(str(broken))
        with self.assertRaises(ConfigError):
            load_config_file(self._write([1, 2, 3], "list.json"))

    def test_round_trip(self):
        config = ExperimentConfig.resolve("gordon", {"lambdas": [0.5, 1.5]}, environ={})
        self.assertEqual(ExperimentConfig.from_dict(config.to_dict()), config)


class TestValidation(unittest.TestCase):
    """Out-of-range values name the offending flag"""

    def assertRejects(self, experiment, flag, **flags):
        with self.assertRaises(ConfigError) as ctx:
            ExperimentConfig.resolve(experiment, flags, environ={})
        self.assertIn(flag, str(ctx.exception))

    def test_common(self):
        self.assertRejects("power", "--seed", seed=-1)
        self.assertRejects("power", "--seed", seed=2 ** 64)
        self.assertRejects("power", "--jobs", jobs=0)
        self.assertRejects("power", "--format", format="xml")
        self.assertRejects("power", "--trials", trials=99)
        self.assertRejects("power", "--epsilon", epsilon=1.0)

    def test_power(self):
        self.assertRejects("power", "--alpha", alpha=math.pi / 4)
        self.assertRejects("power", "--n", n=1)

    def test_conic(self):
        self.assertRejects("conic", "--sigma", sigma=1.5)
        self.assertRejects("conic", "--ill-posed", ill_posed="sphere")
        self.assertRejects("tails", "--grid-points", grid_points=1)

    def test_cones(self):
        self.assertRejects("renegar", "--cone-c", cone_c="cube:3")
        self.assertRejects("cones", "--cones", cone_specs=["orthant:4", "soc:1"])
        self.assertRejects("gordon", "--lambdas", lambdas=[-1.0])

    def test_bounds(self):
        self.assertRejects("bounds", "--beta", alpha=1.0, beta=0.5, gamma=0.5)
        self.assertRejects("bounds", "--a", a=300.0)
        self.assertRejects("bounds", "--widths", widths=[1.0, 2.0])

    def test_unknown_experiment(self):
        with self.assertRaises(ConfigError):
            ExperimentConfig.resolve("nothing", environ={})


if __name__ == "__main__":
    unittest.main()
