"""
Experiment configuration.

Values are resolved with the precedence command-line flags > JSON config file
> per-experiment defaults > field defaults. The WACC_SEED environment variable
overrides the seed from any source.
"""

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

from .cones import parse_cone
from .errors import ConfigError

logger = logging.getLogger(__name__)

SEED_ENV = "WACC_SEED"

EXPERIMENTS = ("conic", "power", "renegar", "cones", "tails", "bounds", "gordon", "spectra")
FORMATS = ("csv", "json")
ILL_POSED_SETS = ("hyperplane", "singular")

# applied to fields left at None by every other source
EXPERIMENT_DEFAULTS = {
    "conic": {"trials": 100_000, "n": 3, "epsilon": 0.01},
    "tails": {"trials": 100_000, "n": 3, "epsilon": 0.01},
    "power": {"trials": 500, "n": 20, "alpha": math.pi / 8, "epsilon": 0.05},
    "renegar": {"trials": 200, "epsilon": 0.01, "cone_c": "orthant:50", "cone_d": "full:200"},
    "cones": {"trials": 100_000},
    "gordon": {"trials": 10_000, "cone_c": "full:25", "cone_d": "full:100"},
    "spectra": {"trials": 10_000, "n": 50},
    "bounds": {"trials": 100_000, "n": 2, "alpha": 1.0 / math.sqrt(2.0), "epsilon": 0.01},
}


@dataclass
class ExperimentConfig:
    """
    Everything needed to run one experiment reproducibly.

    Attributes:
        experiment (str): Subcommand name, one of EXPERIMENTS.
        seed (int): Master seed, 64-bit.
        trials (int): Number of Monte Carlo trials.
        epsilon (float): Exceptional fraction of the weak expectation.
        n (int): Matrix size (power, spectra), sphere dimension (conic with a
            hyperplane) or matrix side (conic with singular matrices).
        alpha (float): Target angle (power) or the regime alpha (bounds).
        beta (float): Regime beta (bounds).
        gamma (float): Regime gamma (bounds).
        max_iter (int): Power iteration budget per start.
        starts (int): Power iteration starts per matrix.
        sigma (float): Cap radius.
        ill_posed (str): "hyperplane" or "singular".
        grid_points (int): Size of the tail grid.
        cone_c (str): Domain cone spec.
        cone_d (str): Target cone spec.
        cone_specs (list): Cones measured by the cones experiment.
        k (int): Schedule index of the asymptotic regime.
        lambdas (list): Gordon deviations.
        deltas (list): Gap thresholds of the spectra experiment.
        width_trials (int): Monte Carlo samples per Gaussian width.
        widths (list): Explicit (w(C), w(D), w(R^m), w(R^n)) for bounds.
        bcl_d (int): Degree for the BCL bound evaluation.
        t (float): Tail point for bounds.
        a (float): Tail scale for the probexp evaluation.
        restarts (int): Solver restarts.
        max_steps (int): Solver steps per restart.
        search_samples (int): Solver random-search samples.
        out (str): Output path; nothing is written when empty.
        format (str): "csv" or "json"; inferred from out when missing.
        jobs (int): Worker processes.
        strict (bool): Escalate solver stalls to errors.
    """

    experiment: str = "power"
    seed: int = 0
    trials: Optional[int] = None
    epsilon: Optional[float] = None
    n: Optional[int] = None
    alpha: Optional[float] = None
    beta: float = 1.0
    gamma: float = 0.5
    max_iter: int = 1_000_000
    starts: int = 32
    sigma: float = 1.0
    ill_posed: str = "hyperplane"
    grid_points: int = 40
    cone_c: Optional[str] = None
    cone_d: Optional[str] = None
    cone_specs: List[str] = field(default_factory=lambda: ["orthant:10", "soc:10", "psd:4", "subspace:3:8"])
    k: int = 0
    lambdas: List[float] = field(default_factory=lambda: [1.0, 2.0])
    deltas: List[float] = field(default_factory=lambda: [0.05, 0.1, 0.2])
    width_trials: int = 100_000
    widths: Optional[List[float]] = None
    bcl_d: int = 1
    t: float = 260.0
    a: float = 1.0
    restarts: int = 64
    max_steps: int = 10_000
    search_samples: int = 4096
    out: Optional[str] = None
    format: Optional[str] = None
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    strict: bool = False

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        """
        Build a config from a dict, rejecting unknown keys.

        Raises:
            ConfigError: If data has keys that are not config fields.
        """
        unknown = sorted(set(data) - set(cls.field_names()))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def resolve(cls, experiment, flags=None, config_path=None, environ=None):
        """
        Merge every source into one validated config.

        Args:
            experiment (str): Subcommand name.
            flags (dict, optional): Values given on the command line; None
                values count as not given.
            config_path (str, optional): JSON file with field-name keys.
            environ (mapping, optional): Environment; defaults to os.environ.

        Returns:
            ExperimentConfig: The resolved and validated config.

        Raises:
            ConfigError: On unreadable files, unknown keys or invalid values.
        """
        values = {}
        if config_path:
            values.update(load_config_file(config_path))
        values.update({key: value for key, value in (flags or {}).items() if value is not None})
        values["experiment"] = experiment

        config = cls.from_dict(values)
        for key, value in EXPERIMENT_DEFAULTS.get(experiment, {}).items():
            if getattr(config, key) is None:
                setattr(config, key, value)

        environ = os.environ if environ is None else environ
        if environ.get(SEED_ENV):
            try:
                seed = int(environ[SEED_ENV], 0)
            except ValueError:
                raise ConfigError(f"{SEED_ENV}={environ[SEED_ENV]!r} is not an integer") from None
            if seed != config.seed:
                logger.warning(f"{SEED_ENV}={seed} overrides seed {config.seed}")
            config.seed = seed

        if config.out and not config.format:
            config.format = "json" if config.out.lower().endswith(".json") else "csv"
        config.validate()
        return config

    def validate(self):
        """
        Check every field used by the experiment against its allowed range.

        Raises:
            ConfigError: Naming the offending flag and the allowed range.
        """
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        _require(0 <= self.seed < 2 ** 64, "--seed", "an integer in [0, 2^64)", self.seed)
        _require(self.jobs >= 1, "--jobs", ">= 1", self.jobs)
        if self.format is not None:
            _require(self.format in FORMATS, "--format", "csv or json", self.format)

        check = getattr(self, f"_validate_{self.experiment}")
        check()

    def _validate_trials(self, minimum=100):
        _require(self.trials is not None and self.trials >= minimum, "--trials", f">= {minimum}", self.trials)

    def _validate_epsilon(self):
        _require(self.epsilon is not None and 0 < self.epsilon < 1, "--epsilon", "(0, 1)", self.epsilon)

    def _validate_budget(self):
        _require(self.restarts >= 1, "--restarts", ">= 1", self.restarts)
        _require(self.max_steps >= 1, "--max-steps", ">= 1", self.max_steps)
        _require(self.search_samples >= 1, "--search-samples", ">= 1", self.search_samples)

    def _validate_cone(self, flag, spec):
        try:
            return parse_cone(spec)
        except (ValueError, TypeError, AttributeError) as e:
            raise ConfigError(f"{flag}: {e}") from None

    def _validate_conic(self):
        self._validate_trials()
        self._validate_epsilon()
        _require(self.ill_posed in ILL_POSED_SETS, "--ill-posed", "hyperplane or singular", self.ill_posed)
        _require(self.n is not None and self.n >= 1, "--n", ">= 1", self.n)
        _require(0 < self.sigma <= 1, "--sigma", "(0, 1]", self.sigma)
        _require(self.grid_points >= 2, "--grid-points", ">= 2", self.grid_points)

    _validate_tails = _validate_conic

    def _validate_power(self):
        self._validate_trials()
        self._validate_epsilon()
        _require(self.n is not None and self.n >= 2, "--n", ">= 2", self.n)
        _require(self.alpha is not None and 0 < self.alpha < math.pi / 4, "--alpha", "(0, pi/4)", self.alpha)
        _require(self.max_iter >= 1, "--max-iter", ">= 1", self.max_iter)
        _require(self.starts >= 1, "--starts", ">= 1", self.starts)

    def _validate_renegar(self):
        self._validate_trials()
        self._validate_epsilon()
        self._validate_budget()
        _require(self.k >= 0, "--k", ">= 0", self.k)
        _require(self.width_trials >= 100, "--width-trials", ">= 100", self.width_trials)
        C = self._validate_cone("--cone-c", self.cone_c)
        D = self._validate_cone("--cone-d", self.cone_d)
        known = "a cone with a known statistical dimension"
        _require(C.closed_form_dimension() is not None, "--cone-c", known, self.cone_c)
        _require(D.closed_form_dimension() is not None, "--cone-d", known, self.cone_d)

    def _validate_cones(self):
        self._validate_trials()
        _require(len(self.cone_specs) >= 1, "--cones", "at least one cone spec", self.cone_specs)
        for spec in self.cone_specs:
            self._validate_cone("--cones", spec)

    def _validate_gordon(self):
        self._validate_trials()
        self._validate_budget()
        self._validate_cone("--cone-c", self.cone_c)
        self._validate_cone("--cone-d", self.cone_d)
        _require(all(lam >= 0 for lam in self.lambdas), "--lambdas", "nonnegative values", self.lambdas)

    def _validate_spectra(self):
        self._validate_trials(minimum=1)
        _require(self.n is not None and self.n >= 2, "--n", ">= 2", self.n)
        _require(all(d > 0 for d in self.deltas), "--deltas", "positive values", self.deltas)

    def _validate_bounds(self):
        self._validate_epsilon()
        _require(self.bcl_d >= 1, "--bcl-d", ">= 1", self.bcl_d)
        _require(self.n is not None and self.n >= 1, "--n", ">= 1", self.n)
        _require(0 < self.sigma <= 1, "--sigma", "(0, 1]", self.sigma)
        _require(self.t > 0, "--t", "> 0", self.t)
        _require(self.t > self.a > 0, "--a", "in (0, t)", self.a)
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            _require(value is not None and 0 < value <= 1, f"--{name}", "(0, 1]", value)
        product = self.alpha * self.gamma
        _require(self.beta > product, "--beta", f"> alpha * gamma = {product:.6g}", self.beta)
        if self.widths is not None:
            _require(len(self.widths) == 4, "--widths", "four values w(C) w(D) w(R^m) w(R^n)", self.widths)


def _require(condition, flag, allowed, value):
    if not condition:
        raise ConfigError(f"{flag} must be {allowed}, got {value!r}")


def load_config_file(path):
    """
    Read a JSON object of config values.

    Raises:
        ConfigError: If the file is missing, malformed or not an object.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    data.pop("experiment", None)
    logger.info(f"Loaded {len(data)} config values from {path}")
    return data
