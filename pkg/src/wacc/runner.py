"""
Experiment dispatch.

run(config) builds the random stream and the worker pool, runs one
experiment, prints its summary rows and writes the record.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager

from .cones import cone_geometry, parse_cone
from .errors import SolverStall
from .power import gue_spectral_facts, gue_weak_experiment
from .records import SUMMARY, ExperimentRecord
from .renegar import (
    AsymptoticRegime,
    ConeWidths,
    SolverBudget,
    asymptotic_limit,
    gordon_experiment,
    keybound,
    keybound_integral_trapezoid,
    laplace_integral,
    renegar_weak_experiment,
)
from .sampling import RngStream
from .weak import (
    ConicConditionSetup,
    bcl_tail_bound,
    conic_cap_experiment,
    probexp_bound,
    theorem_bound,
    theorem_threshold,
    truncated_pareto_mean,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_STRICT = 3

LAPLACE_SIZES = (100, 1000, 10_000)


@contextmanager
def worker_pool(jobs, trials):
    """
    A map-like callable backed by a process pool, or the built-in map for one job.

    Results come back in submission order either way.
    """
    if jobs <= 1:
        yield map
        return
    chunksize = max(1, trials // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        yield lambda fn, *iterables: executor.map(fn, *iterables, chunksize=chunksize)


def _budget(config):
    return SolverBudget(
        restarts=config.restarts, max_steps=config.max_steps, search_samples=config.search_samples
    )


def _new_record(config):
    return ExperimentRecord(config.experiment, config.seed, params=config.to_dict())


def _conic_setup(config):
    if config.ill_posed == "singular":
        return ConicConditionSetup.singular_matrices(config.n, config.sigma)
    return ConicConditionSetup.hyperplane(config.n, config.sigma)


def run_conic(config, stream, mapper):
    setup = _conic_setup(config)
    result = conic_cap_experiment(setup, config.trials, stream, config.epsilon, config.grid_points, mapper)
    weak = result.weak
    record = _new_record(config)
    record.add(
        SUMMARY,
        empirical=weak.conditional_mean,
        empirical_se=weak.conditional_se,
        bound=result.theorem_bound,
        raw_mean=weak.raw_mean,
        threshold=weak.threshold,
        exceptional_count=weak.exceptional_count,
        removed_share=weak.removed_share,
        exceptional_threshold=result.exceptional_threshold,
        degree=setup.degree,
        sphere_dim=setup.n,
        tail_violations=len(result.tail_violations()),
    )
    return record


def run_tails(config, stream, mapper):
    setup = _conic_setup(config)
    result = conic_cap_experiment(setup, config.trials, stream, config.epsilon, config.grid_points, mapper)
    valid = [p for p in result.tail if p.valid]
    record = _new_record(config)
    record.add(SUMMARY, empirical=len(result.tail_violations()), bound=0, valid_points=len(valid))
    for i, point in enumerate(result.tail):
        record.add(
            f"tail:{i}",
            t=point.t,
            empirical_tail=point.empirical_tail,
            standard_error=point.standard_error,
            bcl_bound=point.bcl_bound,
            valid=point.valid,
        )
    return record


def run_power(config, stream, mapper):
    report = gue_weak_experiment(
        config.n, config.alpha, config.epsilon, config.trials, config.max_iter, stream,
        starts=config.starts, mapper=mapper,
    )
    record = _new_record(config)
    record.add(
        SUMMARY,
        empirical=report.conditional_mean_rho,
        empirical_se=report.conditional_se,
        raw_mean=report.raw_mean,
        threshold=report.threshold,
        exceptional_count=report.exceptional_count,
        non_converged=report.non_converged,
        top_share=report.top_share,
        mean_log_eigenratio=report.mean_log_eigenratio,
    )
    for i, rho in enumerate(report.samples):
        record.add(f"trial:{i}", rho=float(rho))
    return record


def run_renegar(config, stream, mapper):
    regime = AsymptoticRegime.from_cones(parse_cone(config.cone_c), parse_cone(config.cone_d))
    result = renegar_weak_experiment(
        regime, config.k, config.epsilon, config.trials, _budget(config), stream,
        width_trials=config.width_trials, strict=config.strict, mapper=mapper,
    )
    weak = result.weak
    bound = result.keybound
    record = _new_record(config)
    record.add(
        SUMMARY,
        empirical=weak.conditional_mean,
        empirical_se=weak.conditional_se,
        bound=result.rhs,
        limit=result.limit,
        raw_mean=weak.raw_mean,
        threshold=weak.threshold,
        exceptional_count=weak.exceptional_count,
        keybound_epsilon=bound.epsilon if bound else None,
        keybound_t_epsilon=bound.t_epsilon if bound else None,
        within_keybound=result.within_keybound(),
        stalled=result.stalled_count,
        k=result.k,
        m=result.m,
        n=result.n,
        alpha=regime.alpha,
        beta=regime.beta,
        gamma=regime.gamma,
    )
    for i, trial in enumerate(result.records):
        record.add(
            f"trial:{i}",
            condition=trial.condition,
            sres_primal=trial.sres_primal,
            sres_dual=trial.sres_dual,
            verdict=trial.verdict,
            stalled=trial.stalled,
        )
    return record


def run_cones(config, stream, mapper):
    record = _new_record(config)
    for i, spec in enumerate(config.cone_specs):
        cone = parse_cone(spec)
        geometry = cone_geometry(cone, config.trials, stream.spawn(i))
        record.add(
            f"{SUMMARY}:{cone.spec}",
            empirical=geometry.statistical_dimension,
            empirical_se=geometry.dimension_se,
            limit=cone.closed_form_dimension(),
            gaussian_width=geometry.gaussian_width,
            width_se=geometry.width_se,
            closed_form_width=cone.closed_form_width(),
            sandwich=geometry.sandwich_holds(),
        )
    return record


def run_gordon(config, stream, mapper):
    C, D = parse_cone(config.cone_c), parse_cone(config.cone_d)
    points = gordon_experiment(
        C, D, config.lambdas, config.trials, stream, _budget(config),
        width_trials=config.width_trials, mapper=mapper,
    )
    record = _new_record(config)
    for point in points:
        record.add(
            f"{SUMMARY}:lambda={point.lam:g}",
            empirical=point.lower_empirical,
            empirical_se=point.lower_se,
            bound=point.prob_bound,
            lower_threshold=point.lower_threshold,
            upper_threshold=point.upper_threshold,
            upper_empirical=point.upper_empirical,
            upper_se=point.upper_se,
            holds=point.holds(),
        )
    return record


def run_spectra(config, stream, mapper):
    facts = gue_spectral_facts(config.n, config.trials, stream, config.deltas, mapper)
    record = _new_record(config)
    record.add(
        f"{SUMMARY}:indefinite",
        empirical=(facts.all_positive + facts.all_negative) / facts.samples,
        bound=0,
        all_positive=facts.all_positive,
        all_negative=facts.all_negative,
    )
    record.add(f"{SUMMARY}:edge", empirical=facts.edge_exceedances / facts.samples, bound=0)
    for delta, probability in facts.gap_probabilities.items():
        record.add(f"{SUMMARY}:gap={delta:g}", empirical=probability, bound=config.n * delta ** 3)
    record.add(f"{SUMMARY}:symmetry", empirical=facts.symmetry_ks)
    return record


def run_bounds(config, stream, mapper):
    record = _new_record(config)
    tail = bcl_tail_bound(config.bcl_d, config.n, config.sigma, config.t)
    record.add(f"{SUMMARY}:bcl", bound=tail.bound, valid=tail.valid)
    record.add(
        f"{SUMMARY}:theorem",
        bound=theorem_bound(config.bcl_d, config.n, config.sigma),
        exceptional_threshold=theorem_threshold(config.bcl_d, config.n, config.sigma),
    )
    record.add(
        f"{SUMMARY}:probexp",
        bound=probexp_bound(config.a, config.t),
        exact=truncated_pareto_mean(config.a, config.t),
    )

    widths = ConeWidths(*config.widths) if config.widths else None
    if widths is not None or (config.cone_c and config.cone_d):
        C = parse_cone(config.cone_c) if config.cone_c else None
        D = parse_cone(config.cone_d) if config.cone_d else None
        params = keybound(C, D, widths, config.width_trials, stream)
        record.add(
            f"{SUMMARY}:keybound",
            bound=params.rhs,
            a=params.a,
            b=params.b,
            epsilon=params.epsilon,
            t_epsilon=params.t_epsilon,
            integral=params.integral,
            integral_trapezoid=keybound_integral_trapezoid(params.a, params.b),
        )

    record.add(f"{SUMMARY}:limit", limit=asymptotic_limit(config.alpha, config.beta, config.gamma))
    for size in LAPLACE_SIZES:
        value = laplace_integral(size, config.alpha, config.beta, config.gamma)
        record.add(f"laplace:{size}", integral=value, scaled=value * math.sqrt(size))
    return record


EXPERIMENTS = {
    "conic": run_conic,
    "tails": run_tails,
    "power": run_power,
    "renegar": run_renegar,
    "cones": run_cones,
    "gordon": run_gordon,
    "spectra": run_spectra,
    "bounds": run_bounds,
}


def run(config):
    """
    Run one experiment.

    Args:
        config (ExperimentConfig): A resolved, validated config.

    Returns:
        int: 0 on success, 3 when --strict escalated a solver stall.
    """
    stream = RngStream(config.seed)
    logger.info(f"Running {config.experiment} with seed {config.seed} on {config.jobs} worker(s)")
    try:
        with worker_pool(config.jobs, config.trials or 1) as mapper:
            record = EXPERIMENTS[config.experiment](config, stream, mapper)
    except SolverStall as e:
        logger.error(f"Solver stall in strict mode: {e}")
        return EXIT_STRICT

    for row in record.summary_rows():
        values = ", ".join(f"{key}={value}" for key, value in row.measures.items())
        print(f"{record.experiment} {row.label}: {values}")
    if config.out:
        record.write(config.out, config.format)
    return EXIT_OK
