"""
wacc - Command Line Interface

Runs the weak average-case experiments and aggregates their output files.

    wacc power --n 20 --alpha 0.3 --epsilon 0.05 --trials 500 --seed 7 --out r.csv
    wacc renegar --cone-c orthant:50 --cone-d full:200 --trials 200 --seed 7
    wacc report r1.csv r2.csv
"""

import argparse
import logging
import sys

from .config import EXPERIMENTS, ExperimentConfig
from .errors import ConfigError, WaccError
from .records import report
from .runner import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, run

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

DESCRIPTIONS = {
    "conic": "weak expectation of a conic condition number on a spherical cap",
    "tails": "empirical tail curve of a conic condition number next to the BCL bound",
    "power": "weak average of power iteration counts on GUE matrices",
    "renegar": "weak average of Renegar's condition number for Gaussian matrices",
    "cones": "Monte Carlo statistical dimension and Gaussian width of cones",
    "gordon": "empirical Gordon tail events for restricted singular values",
    "spectra": "GUE spectral facts: indefiniteness, edge tail, small gaps",
    "bounds": "evaluate the analytic bounds and the asymptotic limit",
}


def _add_experiment_flags(parser):
    """Experiment flags; every default is None so unset flags never override the config file."""
    common = parser.add_argument_group("common")
    common.add_argument("--config", help="JSON file with config values (field names as keys)")
    common.add_argument("--seed", type=lambda s: int(s, 0), help="master seed (WACC_SEED overrides)")
    common.add_argument("--trials", type=int, help="number of Monte Carlo trials")
    common.add_argument("--epsilon", type=float, help="exceptional fraction of the weak expectation")
    common.add_argument("--out", help="output file (.csv or .json)")
    common.add_argument("--format", choices=("csv", "json"), help="output format, inferred from --out")
    common.add_argument("--jobs", type=int, help="worker processes (default: logical cores)")
    common.add_argument("--strict", action="store_true", default=None, help="solver stalls exit with code 3")

    model = parser.add_argument_group("model")
    model.add_argument("--n", type=int, help="matrix size or sphere dimension")
    model.add_argument("--alpha", type=float, help="power iteration angle, or the regime alpha for bounds")
    model.add_argument("--beta", type=float, help="regime beta")
    model.add_argument("--gamma", type=float, help="regime gamma")
    model.add_argument("--max-iter", type=int, help="power iteration budget per start")
    model.add_argument("--starts", type=int, help="power iteration starts per matrix")
    model.add_argument("--sigma", type=float, help="cap radius in (0, 1]")
    model.add_argument("--ill-posed", choices=("hyperplane", "singular"), help="ill-posed set of the conic experiment")
    model.add_argument("--grid-points", type=int, help="points of the log-spaced tail grid")
    model.add_argument("--cone-c", help="domain cone spec, e.g. orthant:50")
    model.add_argument("--cone-d", help="target cone spec, e.g. full:200")
    model.add_argument("--cones", dest="cone_specs", nargs="+", help="cone specs for the cones experiment")
    model.add_argument("--k", type=int, help="schedule index of the asymptotic regime")
    model.add_argument("--lambdas", type=float, nargs="+", help="Gordon deviations")
    model.add_argument("--deltas", type=float, nargs="+", help="gap thresholds for spectra")
    model.add_argument("--width-trials", type=int, help="Monte Carlo samples per Gaussian width")
    model.add_argument("--widths", type=float, nargs=4, metavar=("WC", "WD", "WRM", "WRN"), help="explicit widths")
    model.add_argument("--bcl-d", type=int, help="degree d for the BCL bound")
    model.add_argument("--t", type=float, help="tail point t")
    model.add_argument("--a", type=float, help="tail scale a for probexp")

    solver = parser.add_argument_group("solver")
    solver.add_argument("--restarts", type=int, help="restricted singular value restarts")
    solver.add_argument("--max-steps", type=int, help="projected gradient steps per restart")
    solver.add_argument("--search-samples", type=int, help="random-search samples before descending")


def build_parser():
    parser = argparse.ArgumentParser(prog="wacc", description="Weak average-case analysis experiments.")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sub = subparsers.add_parser(name, help=DESCRIPTIONS[name], description=DESCRIPTIONS[name])
        _add_experiment_flags(sub)

    report_parser = subparsers.add_parser("report", help="pool record files and compare with bounds")
    report_parser.add_argument("paths", nargs="+", help="files written by earlier runs")
    return parser


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)


def print_report(sections):
    for experiment, lines in sections.items():
        print(f"== {experiment} ==")
        for line in lines:
            print(line.format())


def main(argv=None):
    """Main function"""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        if args.command == "report":
            print_report(report(args.paths))
            return EXIT_OK
        flags = {
            key: value
            for key, value in vars(args).items()
            if key not in ("command", "config", "verbose", "quiet")
        }
        config = ExperimentConfig.resolve(args.command, flags, args.config)
        return run(config)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except WaccError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
