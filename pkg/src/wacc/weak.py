"""
Weak average-case analysis toolkit.

Conic condition numbers, the tail bound for condition numbers of algebraic
ill-posed sets, the truncated-expectation bound for t^{-1} tails, and the
empirical exceptional-set truncation that turns a sample of a heavy-tailed
quantity into a finite conditional mean.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import List, NamedTuple

import numpy as np

from .errors import EmptyInput, InvalidRange, InvalidSigma, PreconditionViolated
from .linalg import as_matrix, svd_values
from .sampling import RngStream, as_generator, uniform_cap

logger = logging.getLogger(__name__)

BCL_CONSTANT = 13.0


def conic_condition(x, dist_to_sigma):
    """
    C(x) = ||x|| / dist(x, Sigma); infinite on Sigma.

    Args:
        x (array_like): The point, a nonzero vector.
        dist_to_sigma (float): Its distance to the ill-posed set.
    """
    norm = float(np.linalg.norm(x))
    if norm == 0:
        raise PreconditionViolated("the conic condition number is undefined at 0")
    if dist_to_sigma < 0:
        raise PreconditionViolated(f"distance must be nonnegative, got {dist_to_sigma}")
    return math.inf if dist_to_sigma == 0 else norm / dist_to_sigma


def kappa_frobenius(A):
    """
    ||A||_F / sigma_min(A) for a square matrix; infinite for singular A.

    Equals the conic condition number of A / ||A||_F with respect to the set
    of singular matrices, since dist_F(A, singular) = sigma_min(A).
    """
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise PreconditionViolated(f"kappa_F needs a square matrix, got shape {M.shape}")
    values = svd_values(M).values
    frobenius = float(np.linalg.norm(values))
    smallest = float(values[-1])
    if frobenius == 0 or smallest <= np.finfo(float).eps * M.shape[0] * values[0]:
        return math.inf
    return frobenius / smallest


class TailBound(NamedTuple):
    bound: float
    valid: bool


def bcl_tail_bound(d, n, sigma, t):
    """
    Tail bound P{C(x) > t} < 13 d n / (t sigma) for x uniform in a cap of S^n.

    The bound is returned for every t > 0; valid reports whether
    t >= (1 + 2d)(n - 1) / sigma, where it is guaranteed.
    """
    if d < 1 or n < 1:
        raise PreconditionViolated(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    if not 0 < sigma <= 1:
        raise InvalidSigma(f"cap radius must lie in (0, 1], got {sigma}")
    if t <= 0:
        raise PreconditionViolated(f"t must be positive, got {t}")
    return TailBound(BCL_CONSTANT * d * n / (t * sigma), t >= (1 + 2 * d) * (n - 1) / sigma)


def probexp_bound(a, t):
    """
    Upper bound a / (1 - a/t) * (1 - log(a/t)) on E[X | X <= t] when P{X > s} <= a/s.

    Raises:
        InvalidRange: Unless t > a > 0.
    """
    if not t > a > 0:
        raise InvalidRange(f"need t > a > 0, got a={a}, t={t}")
    ratio = a / t
    return a / (1.0 - ratio) * (1.0 - math.log(ratio))


def truncated_pareto_mean(a, t):
    """Exact E[X | X <= t] for P{X > s} = a/s (s >= a): a ln(t/a) / (1 - a/t)."""
    if not t > a > 0:
        raise InvalidRange(f"need t > a > 0, got a={a}, t={t}")
    return a * math.log(t / a) / (1.0 - a / t)


def theorem_bound(d, n, sigma):
    """Conditional-mean bound 13 d n (n+1) / ((1 - e^{-n}) sigma) outside the exceptional set."""
    return BCL_CONSTANT * d * n * (n + 1) / ((1.0 - math.exp(-n)) * sigma)


def theorem_threshold(d, n, sigma):
    """Exceptional-set threshold a e^n with a = 13 d n / sigma."""
    return BCL_CONSTANT * d * n / sigma * math.exp(n)


@dataclass
class WeakExpectationReport:
    """
    Empirical weak expectation of a sample.

    Attributes:
        epsilon (float): Exceptional fraction.
        threshold (float): Smallest removed sample (inf when nothing was removed).
        conditional_mean (float): Mean of the kept samples.
        raw_mean (float): Mean of all samples.
        exceptional_count (int): Number of removed samples.
        sample_count (int): Number of samples.
        conditional_se (float): Standard error of the conditional mean.
        removed_share (float): Fraction of the raw sum carried by removed samples.
    """

    epsilon: float
    threshold: float
    conditional_mean: float
    raw_mean: float
    exceptional_count: int
    sample_count: int
    conditional_se: float = math.nan
    removed_share: float = math.nan


def exceptional_count(sample_count, epsilon):
    """ceil(epsilon * N), capped so that at least one sample is kept."""
    # guard against epsilon * N landing a rounding error above an integer
    count = math.ceil(epsilon * sample_count - 1e-9)
    return min(max(count, 0), sample_count - 1)


def weak_expectation(samples, epsilon):
    """
    Remove the ceil(epsilon * N) largest samples and average the rest.

    Removing the upper tail gives the smallest conditional mean among all
    removals of the same size. Ties at the threshold are resolved by sample
    order (later samples are removed first); infinite samples are always
    removed first.

    Args:
        samples (array_like): Real samples, +inf allowed.
        epsilon (float): Exceptional fraction in [0, 1); 0 removes nothing.

    Returns:
        WeakExpectationReport: The truncated summary.

    Raises:
        EmptyInput: If samples is empty.
    """
    values = np.asarray(samples, dtype=float).ravel()
    if values.size == 0:
        raise EmptyInput("weak_expectation needs at least one sample")
    if np.any(np.isnan(values)):
        raise PreconditionViolated("samples contain NaN")
    if not 0 <= epsilon < 1:
        raise PreconditionViolated(f"epsilon must lie in [0, 1), got {epsilon}")

    N = values.size
    removed = exceptional_count(N, epsilon)
    keep = np.ones(N, dtype=bool)
    threshold = math.inf
    if removed:
        order = np.argsort(values, kind="stable")
        dropped = order[N - removed:]
        keep[dropped] = False
        threshold = float(values[dropped[0]])

    kept = values[keep]
    with np.errstate(invalid="ignore"):
        raw_mean = float(np.mean(values))
        total = float(np.sum(values))
        share = float(np.sum(values[~keep]) / total) if total not in (0.0, math.inf) else math.nan
    return WeakExpectationReport(
        epsilon=epsilon,
        threshold=threshold,
        conditional_mean=float(np.mean(kept)),
        raw_mean=raw_mean,
        exceptional_count=removed,
        sample_count=N,
        conditional_se=float(np.std(kept, ddof=1) / math.sqrt(kept.size)) if kept.size > 1 else math.nan,
        removed_share=share,
    )


def heavy_tail_share(samples, fraction):
    """Share of the sample sum held by the top ceil(fraction * N) samples."""
    values = np.sort(np.asarray(samples, dtype=float).ravel())
    top = max(1, math.ceil(fraction * values.size - 1e-9))
    total = float(np.sum(values))
    return float(np.sum(values[-top:]) / total) if total > 0 else math.nan


class HyperplaneDistance:
    """Euclidean distance to the hyperplane {x : <a, x> = 0}."""

    degree = 1

    def __init__(self, normal):
        normal = np.asarray(normal, dtype=float)
        self.normal = normal / np.linalg.norm(normal)

    @property
    def ambient_dim(self):
        return len(self.normal)

    def __call__(self, x):
        return np.abs(np.asarray(x) @ self.normal)

    def __repr__(self):
        return f"HyperplaneDistance(ambient_dim={self.ambient_dim})"


class SingularMatrixDistance:
    """
    Frobenius distance from a vectorised size x size matrix to the singular matrices.

    By Eckart-Young this is the smallest singular value. The ill-posed set is
    the zero set of the determinant, of degree `size`.
    """

    def __init__(self, size):
        self.size = size
        self.degree = size

    @property
    def ambient_dim(self):
        return self.size * self.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        matrices = x.reshape(x.shape[:-1] + (self.size, self.size))
        return np.linalg.svd(matrices, compute_uv=False)[..., -1]

    def __repr__(self):
        return f"SingularMatrixDistance(size={self.size})"


class PointCloudDistance:
    """
    Brute-force distance to the cone spanned by sampled points of Sigma.

    For a ray through a unit point y, dist(x, ray) = sqrt(||x||^2 - max(<x, y>, 0)^2).
    """

    def __init__(self, points, degree=1):
        points = np.asarray(points, dtype=float)
        self.points = points / np.linalg.norm(points, axis=1, keepdims=True)
        self.degree = degree

    @property
    def ambient_dim(self):
        return self.points.shape[1]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        best = np.max(np.maximum(x @ self.points.T, 0.0), axis=1)
        squared = np.sum(x * x, axis=1) - best ** 2
        out = np.sqrt(np.maximum(squared, 0.0))
        return out[0] if single else out

    def __repr__(self):
        return f"PointCloudDistance(points={len(self.points)})"


@dataclass
class ConicConditionSetup:
    """
    Cap experiment setup on S^n in R^{n+1}.

    Attributes:
        n (int): Sphere dimension.
        degree (int): Degree bound d for the algebraic set containing Sigma.
        center (numpy.ndarray): Cap center z, a unit vector in R^{n+1}.
        sigma (float): Cap radius in (0, 1].
        oracle (callable): Batched distance to Sigma.
    """

    n: int
    degree: int
    center: np.ndarray
    sigma: float
    oracle: object

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.degree < 1:
            raise PreconditionViolated(f"degree must be >= 1, got {self.degree}")
        if not 0 < self.sigma <= 1:
            raise InvalidSigma(f"cap radius must lie in (0, 1], got {self.sigma}")
        if self.center.shape != (self.n + 1,):
            raise PreconditionViolated(f"center must live in R^{self.n + 1}, got shape {self.center.shape}")
        if abs(np.linalg.norm(self.center) - 1.0) > 1e-12:
            raise PreconditionViolated("cap center must be a unit vector")

    @classmethod
    def hyperplane(cls, n, sigma=1.0, center=None):
        """Sigma = {x_1 = 0} in S^n, cap centered on Sigma unless told otherwise."""
        if center is None:
            center = np.zeros(n + 1)
            center[-1] = 1.0
        normal = np.zeros(n + 1)
        normal[0] = 1.0
        return cls(n, 1, center, sigma, HyperplaneDistance(normal))

    @classmethod
    def singular_matrices(cls, size, sigma=1.0, center=None):
        """Sigma = singular size x size matrices in S^{size^2 - 1}."""
        if center is None:
            center = np.eye(size).ravel() / math.sqrt(size)
        return cls(size * size - 1, size, center, sigma, SingularMatrixDistance(size))


class TailPoint(NamedTuple):
    t: float
    empirical_tail: float
    standard_error: float
    bcl_bound: float
    valid: bool


@dataclass
class ConicCapResult:
    tail: List[TailPoint]
    weak: WeakExpectationReport
    theorem_bound: float
    exceptional_threshold: float
    samples: np.ndarray = field(repr=False, default=None)

    def tail_violations(self, k=3.0):
        """Valid grid points where the empirical tail exceeds the bound by more than k SE."""
        return [p for p in self.tail if p.valid and p.empirical_tail > p.bcl_bound + k * p.standard_error]


def _chunk_conditions(setup, count, source):
    points = uniform_cap(source, setup.center, setup.sigma, size=count)
    distances = np.asarray(setup.oracle(points), dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(distances > 0, 1.0 / distances, np.inf)


def condition_samples(setup, trials, stream, chunk=100_000, mapper=map):
    """
    Sample x uniformly on B(z, sigma) and return C(x) for each sample.

    Chunk i draws from stream.spawn(i), so the output does not depend on the
    mapper. A live Generator is consumed sequentially instead.
    """
    sizes = [min(chunk, trials - start) for start in range(0, trials, chunk)]
    if isinstance(stream, RngStream):
        sources = [stream.spawn(i) for i in range(len(sizes))]
    else:
        rng = as_generator(stream)
        sources = [rng] * len(sizes)
    return np.concatenate(list(mapper(partial(_chunk_conditions, setup), sizes, sources)))


def tail_curve(samples, d, n, sigma, grid_points=40):
    """Empirical tail P{C > t} on a log-spaced grid, next to the BCL bound; empty if no sample is finite."""
    samples = np.asarray(samples, dtype=float)
    finite = samples[np.isfinite(samples)]
    if finite.size == 0:
        return []
    low = max(float(np.min(finite)), 1e-12)
    high = max(float(np.max(finite)), low * 10.0)
    grid = np.geomspace(low, high, grid_points)
    N = samples.size
    points = []
    for t in grid:
        p = float(np.count_nonzero(samples > t)) / N
        bound, valid = bcl_tail_bound(d, n, sigma, float(t))
        points.append(TailPoint(float(t), p, math.sqrt(max(p * (1 - p), 1.0 / N) / N), bound, valid))
    return points


def conic_cap_experiment(setup, trials, stream, epsilon=0.01, grid_points=40, mapper=map):
    """
    Empirical tail and weak expectation of a conic condition number on a cap.

    Args:
        setup (ConicConditionSetup): Sphere, degree, cap and distance oracle.
        trials (int): Cap samples, at least 100.
        stream (RngStream or Generator): Randomness source.
        epsilon (float): Exceptional fraction for the weak expectation.
        grid_points (int): Size of the log-spaced t grid.
        mapper (callable): map-like function over sample chunks.

    Returns:
        ConicCapResult: Tail curve, weak report and the analytic bounds.
    """
    if trials < 100:
        raise PreconditionViolated(f"trials must be >= 100, got {trials}")
    logger.info(f"cap experiment: n={setup.n}, d={setup.degree}, sigma={setup.sigma}, trials={trials}")
    samples = condition_samples(setup, trials, stream, mapper=mapper)
    infinite = int(np.sum(~np.isfinite(samples)))
    if infinite:
        logger.warning(f"{infinite} samples landed on Sigma (infinite condition)")
    result = ConicCapResult(
        tail=tail_curve(samples, setup.degree, setup.n, setup.sigma, grid_points),
        weak=weak_expectation(samples, epsilon),
        theorem_bound=theorem_bound(setup.degree, setup.n, setup.sigma),
        exceptional_threshold=theorem_threshold(setup.degree, setup.n, setup.sigma),
        samples=samples,
    )
    violations = result.tail_violations()
    if violations:
        logger.warning(f"empirical tail exceeds the bound at {len(violations)} valid grid points")
    return result
