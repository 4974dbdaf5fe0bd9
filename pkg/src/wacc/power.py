"""
Power iteration on Hermitian matrices.

Convergence is measured in the Fubini-Study metric against the dominant
eigenvector. The module also evaluates Kostlan's per-start iteration bounds
and runs the weak average-case experiment on GUE matrices, where the largest
per-matrix iteration means are treated as the exceptional set.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import List, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import DegenerateSpectrum, OrthogonalStart, PreconditionViolated, ZeroIterate
from .linalg import LAPACK, as_matrix, fubini_study_distance, hermitian_eig
from .sampling import RngStream, as_generator, gue_matrix, uniform_projective
from .weak import heavy_tail_share, weak_expectation

logger = logging.getLogger(__name__)

# angular slack so that starts exactly on the alpha-boundary count as converged
ANGLE_TOL = 1e-12
DEGENERATE_TOL = 1e-12
ORTHOGONAL_TOL = 1e-14
DEFAULT_STARTS = 32


class KostlanBounds(NamedTuple):
    lower: float
    upper: float


@dataclass
class PowerRunResult:
    """
    Outcome of one power iteration run.

    Attributes:
        iterations (int): rho_alpha(A, x), or max_iter when not converged.
        converged (bool): Whether d(p_k, u_1) <= alpha was reached.
        final_distance (float): Fubini-Study distance of the last iterate to u_1.
        lower_bound (float): Kostlan lower bound (nan when undefined).
        upper_bound (float): Kostlan upper bound (nan when undefined).
    """

    iterations: int
    converged: bool
    final_distance: float
    lower_bound: float = math.nan
    upper_bound: float = math.nan

    def within_bounds(self):
        """lower <= iterations <= upper + 1; None when the bounds do not apply."""
        if not self.converged or math.isnan(self.lower_bound):
            return None
        return self.lower_bound <= self.iterations <= self.upper_bound + 1


@dataclass
class RhoEstimate:
    """Monte Carlo estimate of rho_alpha(A) over uniform projective starts."""

    mean: float
    standard_error: float
    trials: int
    non_converged: int
    iterations: np.ndarray = field(repr=False, default=None)

    def __float__(self):
        return float(self.mean)


@dataclass
class GuePowerReport:
    """
    Summary of the weak average-case power iteration experiment.

    threshold is the smallest discarded per-matrix mean (x_0);
    conditional_mean_rho is the mean over the kept matrices.
    """

    n: int
    alpha: float
    epsilon: float
    threshold: float
    exceptional_count: int
    conditional_mean_rho: float
    trials: int
    raw_mean: float = math.nan
    conditional_se: float = math.nan
    non_converged: int = 0
    top_share: float = math.nan
    mean_log_eigenratio: float = math.nan
    samples: np.ndarray = field(repr=False, default=None)


@dataclass
class GueSpectralFacts:
    n: int
    samples: int
    all_positive: int
    all_negative: int
    edge_exceedances: int
    gap_probabilities: dict
    symmetry_ks: float


def _spectrum_of(A, spectrum, eig_method):
    return spectrum if spectrum is not None else hermitian_eig(A, method=eig_method)


def power_iterate_batch(A, X0, alpha, max_iter, spectrum=None, eig_method=LAPACK):
    """
    Run the normalised power map from many starts at once.

    Args:
        A (array_like): Hermitian matrix.
        X0 (array_like): Start vectors as rows, shape (starts, n).
        alpha (float): Target angle in (0, pi/2).
        max_iter (int): Iteration budget per start.
        spectrum (HermitianSpectrum, optional): Precomputed spectrum of A.
        eig_method (str): Eigensolver used when spectrum is not given.

    Returns:
        tuple: (iterations, converged, final_iterates) with iterations set to
        max_iter for runs that did not converge.

    Raises:
        ZeroIterate: If some iterate is mapped to zero.
    """
    if not 0 < alpha < math.pi / 2:
        raise PreconditionViolated(f"alpha must lie in (0, pi/2), got {alpha}")
    if max_iter < 1:
        raise PreconditionViolated(f"max_iter must be >= 1, got {max_iter}")
    A = as_matrix(A, dtype=complex)
    spectrum = _spectrum_of(A, spectrum, eig_method)
    _, u1 = spectrum.dominant

    P = np.array(X0, dtype=complex, ndmin=2)
    norms = np.linalg.norm(P, axis=1)
    if np.any(norms == 0):
        raise ZeroIterate("start vector is zero")
    P /= norms[:, None]

    cos_target = math.cos(alpha + ANGLE_TOL)
    iterations = np.full(len(P), max_iter, dtype=np.int64)
    converged = np.abs(P.conj() @ u1) >= cos_target
    iterations[converged] = 0
    active = np.flatnonzero(~converged)

    k = 0
    while active.size and k < max_iter:
        Y = P[active] @ A.T
        step_norms = np.linalg.norm(Y, axis=1)
        if np.any(step_norms == 0):
            raise ZeroIterate("power map sent an iterate to zero (start in the kernel of A)")
        P[active] = Y / step_norms[:, None]
        k += 1
        done = np.abs(P[active].conj() @ u1) >= cos_target
        iterations[active[done]] = k
        converged[active[done]] = True
        active = active[~done]

    return iterations, converged, P


def kostlan_bounds(A, x, alpha, spectrum=None, eig_method=LAPACK):
    """
    Kostlan's lower and upper bounds on rho_alpha(A, x).

    lower = (log cot a + log||P_2 x|| - log||P_1 x||) / (log|l_1| - log|l_2|)
    upper uses ||P_{u_1 perp} x|| in place of ||P_2 x||. A vanishing
    projection gives -inf (the bound is vacuous).

    Raises:
        DegenerateSpectrum: If |lambda_1| - |lambda_2| <= 1e-12 |lambda_1|.
        OrthogonalStart: If x has no component along u_1.
    """
    A = as_matrix(A, dtype=complex)
    spectrum = _spectrum_of(A, spectrum, eig_method)
    magnitudes = np.abs(spectrum.eigenvalues)
    if len(magnitudes) < 2 or magnitudes[0] - magnitudes[1] <= DEGENERATE_TOL * magnitudes[0]:
        raise DegenerateSpectrum("|lambda_1| and |lambda_2| coincide")

    x = np.asarray(x, dtype=complex)
    x = x / np.linalg.norm(x)
    coefficients = spectrum.eigenvectors.conj().T @ x
    a1 = abs(coefficients[0])
    if a1 <= ORTHOGONAL_TOL:
        raise OrthogonalStart("start vector is orthogonal to the dominant eigenvector")
    a2 = abs(coefficients[1])
    perp = math.sqrt(float(np.sum(np.abs(coefficients[1:]) ** 2)))

    with np.errstate(divide="ignore"):
        gap = math.log(magnitudes[0]) - float(np.log(magnitudes[1]))
        base = math.log(1.0 / math.tan(alpha)) - math.log(a1)

        def bound(component):
            if component == 0:
                return -math.inf
            return (base + math.log(component)) / gap

        return KostlanBounds(bound(a2), bound(perp))


def expected_rho_bounds(A, alpha, spectrum=None, eig_method=LAPACK):
    """
    Kostlan's bounds on the expectation of rho_alpha(A, x) over uniform starts.

    Reported for comparison only.
    """
    A = as_matrix(A, dtype=complex)
    spectrum = _spectrum_of(A, spectrum, eig_method)
    n = spectrum.size
    ratio = spectrum.eigenratio
    if not ratio > 1 + DEGENERATE_TOL:
        raise DegenerateSpectrum("|lambda_1| and |lambda_2| coincide")
    gap = math.log(ratio)
    log_cot = math.log(1.0 / math.tan(alpha))
    upper = (0.5 * (math.log(n) + 2.0 * (n - 1) / n) + max(0.0, log_cot)) / gap
    return KostlanBounds(log_cot / gap, upper)


def power_iterate(A, x0, alpha, max_iter, spectrum=None, eig_method=LAPACK):
    """
    Iterate p_k = A p_{k-1} / ||A p_{k-1}|| until d(p_k, u_1) <= alpha.

    Args:
        A (array_like): Hermitian matrix.
        x0 (array_like): Nonzero start vector.
        alpha (float): Target angle in (0, pi/2).
        max_iter (int): Iteration budget.
        spectrum (HermitianSpectrum, optional): Precomputed spectrum of A.
        eig_method (str): Eigensolver when spectrum is not given.

    Returns:
        PowerRunResult: Iteration count, convergence flag, final distance and
        Kostlan bounds (nan when the spectrum is degenerate or the start is
        orthogonal to u_1).
    """
    A = as_matrix(A, dtype=complex)
    spectrum = _spectrum_of(A, spectrum, eig_method)
    iterations, converged, P = power_iterate_batch(A, [x0], alpha, max_iter, spectrum)
    _, u1 = spectrum.dominant

    try:
        lower, upper = kostlan_bounds(A, x0, alpha, spectrum)
    except (DegenerateSpectrum, OrthogonalStart):
        lower, upper = math.nan, math.nan

    result = PowerRunResult(
        iterations=int(iterations[0]),
        converged=bool(converged[0]),
        final_distance=fubini_study_distance(P[0], u1),
        lower_bound=lower,
        upper_bound=upper,
    )
    if not result.converged:
        logger.debug(f"power iteration did not reach alpha={alpha} in {max_iter} steps")
    return result


def mc_rho(A, alpha, trials, max_iter, stream, spectrum=None, eig_method=LAPACK):
    """
    Monte Carlo estimate of rho_alpha(A) = E_x[rho_alpha(A, x)], x uniform on CP^{n-1}.

    Non-converged runs count as max_iter and are reported separately.

    Returns:
        RhoEstimate: Mean, standard error, and the per-start iteration counts.
    """
    if trials < 1:
        raise PreconditionViolated(f"trials must be >= 1, got {trials}")
    A = as_matrix(A, dtype=complex)
    spectrum = _spectrum_of(A, spectrum, eig_method)
    starts = uniform_projective(stream, A.shape[0], size=trials)
    iterations, converged, _ = power_iterate_batch(A, starts, alpha, max_iter, spectrum)
    counts = iterations.astype(float)
    se = float(np.std(counts, ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    non_converged = int(np.sum(~converged))
    if non_converged:
        logger.warning(f"{non_converged} of {trials} starts did not converge within {max_iter} steps")
    return RhoEstimate(float(np.mean(counts)), se, trials, non_converged, iterations)


def _gue_trial(n, alpha, max_iter, starts, eig_method, stream):
    rng = as_generator(stream)
    H = gue_matrix(rng, n)
    spectrum = hermitian_eig(H, method=eig_method)
    estimate = mc_rho(H, alpha, starts, max_iter, rng, spectrum)
    return estimate.mean, estimate.non_converged, math.log(spectrum.eigenratio)


def gue_weak_experiment(
    n,
    alpha,
    epsilon,
    trials,
    max_iter,
    stream,
    starts=DEFAULT_STARTS,
    eig_method=LAPACK,
    mapper=map,
):
    """
    Weak average-case estimate of power iteration on GUE matrices.

    Samples trials GUE matrices, estimates rho_alpha(H) for each from
    `starts` uniform projective starts, discards the ceil(epsilon * trials)
    largest estimates and averages the rest.

    Args:
        n (int): Matrix size.
        alpha (float): Target angle in (0, pi/4).
        epsilon (float): Exceptional fraction in (0, 1).
        trials (int): Number of GUE matrices, at least 100.
        max_iter (int): Iteration budget per start.
        stream (RngStream): Experiment stream; trial i uses stream.spawn(i).
        starts (int): Starts per matrix.
        eig_method (str): Eigensolver for the dominant eigenvector.
        mapper (callable): map-like function; results are consumed in trial order.

    Returns:
        GuePowerReport: The summary.
    """
    if not 0 < alpha < math.pi / 4:
        raise PreconditionViolated(f"alpha must lie in (0, pi/4), got {alpha}")
    if not 0 < epsilon < 1:
        raise PreconditionViolated(f"epsilon must lie in (0, 1), got {epsilon}")
    if trials < 100:
        raise PreconditionViolated(f"trials must be >= 100, got {trials}")

    logger.info(f"GUE power experiment: n={n}, alpha={alpha:.4f}, trials={trials}, starts={starts}")
    trial = partial(_gue_trial, n, alpha, max_iter, starts, eig_method)
    outcomes = list(mapper(trial, [stream.spawn(i) for i in range(trials)]))
    return summarize_rho_samples(
        n,
        alpha,
        epsilon,
        np.array([o[0] for o in outcomes]),
        non_converged=sum(o[1] for o in outcomes),
        log_ratios=np.array([o[2] for o in outcomes]),
    )


def summarize_rho_samples(n, alpha, epsilon, samples, non_converged=0, log_ratios=None):
    """Apply the empirical exceptional-set truncation to per-matrix rho estimates."""
    weak = weak_expectation(samples, epsilon)
    return GuePowerReport(
        n=n,
        alpha=alpha,
        epsilon=epsilon,
        threshold=weak.threshold,
        exceptional_count=weak.exceptional_count,
        conditional_mean_rho=weak.conditional_mean,
        trials=len(samples),
        raw_mean=weak.raw_mean,
        conditional_se=weak.conditional_se,
        non_converged=non_converged,
        top_share=heavy_tail_share(samples, epsilon),
        mean_log_eigenratio=float(np.mean(log_ratios)) if log_ratios is not None else math.nan,
        samples=np.asarray(samples),
    )


def _spectrum_trial(n, stream):
    return np.linalg.eigvalsh(gue_matrix(stream, n))


def gue_spectral_facts(n, samples, stream, deltas: Sequence[float] = (0.05, 0.1, 0.2), mapper=map):
    """
    Empirical check of three GUE spectral facts.

    Counts all-positive and all-negative spectra, counts lambda_max >= 3 sqrt(n),
    estimates P{delta_min <= delta / sqrt(n)} for each delta, and computes the
    two-sample KS statistic between lambda_max and -lambda_min.
    """
    spectra: List[np.ndarray] = list(
        mapper(partial(_spectrum_trial, n), [stream.spawn(i) for i in range(samples)])
    )
    values = np.array(spectra)
    lam_max = values[:, -1]
    lam_min = values[:, 0]
    gaps = np.min(np.diff(values, axis=1), axis=1) if n > 1 else np.full(samples, np.inf)
    gap_probabilities = {float(d): float(np.mean(gaps <= d / math.sqrt(n))) for d in deltas}
    return GueSpectralFacts(
        n=n,
        samples=samples,
        all_positive=int(np.sum(lam_min > 0)),
        all_negative=int(np.sum(lam_max < 0)),
        edge_exceedances=int(np.sum(lam_max >= 3.0 * math.sqrt(n))),
        gap_probabilities=gap_probabilities,
        symmetry_ks=float(stats.ks_2samp(lam_max, -lam_min).statistic),
    )
