"""
Renegar's condition number for biconic feasibility problems.

A problem is a matrix A (n x m) with closed convex cones C in R^m and D in R^n.
The primal problem asks for x in C \\ {0} with Ax in D°, the dual for
y in D \\ {0} with -A^T y in C°. Both are measured by restricted singular
values

    sigma_{C,D}(A) = min_{x in C, ||x|| = 1} ||P_D(Ax)||

which vanish exactly on the feasible instances. Linear cone pairs are solved
exactly by SVD; everything else goes through a multi-start projected
gradient solver whose value is an upper bound on the true minimum.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import List, NamedTuple, Optional

import numpy as np
from scipy import integrate

from .cones import Cone, FullSpace, Subspace, chi_mean, cone_geometry, parse_cone
from .errors import DimensionMismatch, PreconditionViolated, SolverStall
from .linalg import as_matrix, svd_values
from .sampling import RngStream, as_generator, gaussian_matrix
from .weak import WeakExpectationReport, weak_expectation

logger = logging.getLogger(__name__)

# feasibility tolerance, relative to ||A||
ZERO_TOL = 1e-8
# objective values below (SOLVER_FLOOR * ||A||)^2 / 2 count as converged
SOLVER_FLOOR = 1e-14
MAX_HALVINGS = 60
STEP_GROWTH_CAP = 1024.0
KEYBOUND_GAP = 2.0 * math.sqrt(2.0)
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class SolverBudget:
    """
    Effort limits for the restricted singular value solver.

    Attributes:
        restarts (int): Independent projected-gradient runs.
        max_steps (int): Step limit per run.
        rel_tol (float): Stop a run once its relative decrease falls below this.
        search_samples (int): Random points of C on the sphere evaluated before
            descending; the best of them seed the runs.
        report_tol (float): Restarts within report_tol * ||A|| of the best agree.
    """

    restarts: int = 64
    max_steps: int = 10_000
    rel_tol: float = 1e-12
    search_samples: int = 4096
    report_tol: float = 1e-6

    def __post_init__(self):
        if self.restarts < 1 or self.max_steps < 1 or self.search_samples < 1:
            raise PreconditionViolated(f"solver budget must be positive: {self}")

    def to_dict(self):
        return {
            "restarts": self.restarts,
            "max_steps": self.max_steps,
            "rel_tol": self.rel_tol,
            "search_samples": self.search_samples,
            "report_tol": self.report_tol,
        }


DEFAULT_BUDGET = SolverBudget()
GORDON_BUDGET = SolverBudget(restarts=8, max_steps=2000, search_samples=512)


@dataclass
class SresResult:
    """
    A restricted singular value with its quality flags.

    Attributes:
        value (float): The (upper-bound) estimate.
        exact (bool): Computed by an exact route (SVD or kernel witness).
        stalled (bool): A restart ran out of steps before meeting the tolerance,
            or fewer than two restarts agreed with the best value.
        agreeing (int): Restarts within the reporting tolerance of the best.
        restarts (int): Restarts run (0 for exact routes).
        steps (int): Gradient steps taken by the slowest restart.
    """

    value: float
    exact: bool = False
    stalled: bool = False
    agreeing: int = 0
    restarts: int = 0
    steps: int = 0

    def __float__(self):
        return float(self.value)


def _check_shapes(A, C, D):
    n, m = A.shape
    if C.ambient_dim != m or D.ambient_dim != n:
        raise DimensionMismatch(
            f"A is {n}x{m} but C lives in R^{C.ambient_dim} and D in R^{D.ambient_dim}"
        )


def _is_zero_cone(cone):
    return isinstance(cone, Subspace) and cone.k == 0


def _linear_basis(cone):
    if isinstance(cone, (FullSpace, Subspace)):
        return cone.basis()
    # polar simplification turns linear cones into FullSpace / Subspace
    return None


def _exact_sres(A, C, D, scale):
    """Exact value for linear domains with a kernel, and for linear pairs; None otherwise."""
    B = _linear_basis(C)
    if B is None:
        return None
    k = B.shape[1]
    Q = _linear_basis(D)
    if Q is not None:
        if Q.shape[1] < k:
            return 0.0
        return svd_values(Q.T @ A @ B).smallest
    if A.shape[0] < k:
        return 0.0
    smallest = svd_values(A @ B).smallest
    if smallest <= ZERO_TOL * scale:
        return 0.0
    return None


def _sphere_points(cone, count, rng):
    points = cone.project(rng.standard_normal((count, cone.ambient_dim)))
    norms = np.linalg.norm(points, axis=1)
    nonzero = norms > 0
    return points[nonzero] / norms[nonzero, None]


def _objective(A, D, X):
    P = D.project(X @ A.T)
    return P, 0.5 * np.sum(P * P, axis=1)


def _descend(A, C, D, X, budget, scale):
    """
    Projected gradient on f(x) = ||P_D(Ax)||^2 / 2 over C on the unit sphere.

    The gradient is A^T P_D(Ax). Each row keeps its own step, starting at
    1 / ||A||^2, doubled after an accepted step and halved on rejection.

    Returns the rows, their objective values, the steps taken and whether
    any row was still active when max_steps ran out.
    """
    base = 1.0 / scale ** 2
    floor = 0.5 * (SOLVER_FLOOR * scale) ** 2
    P, f = _objective(A, D, X)
    eta = np.full(len(X), base)
    active = f > floor
    steps = 0
    while active.any() and steps < budget.max_steps:
        idx = np.flatnonzero(active)
        grad = P[idx] @ A
        trial_eta = np.minimum(2.0 * eta[idx], STEP_GROWTH_CAP * base)
        pending = np.ones(len(idx), dtype=bool)
        previous = f[idx].copy()
        for _ in range(MAX_HALVINGS):
            rows = np.flatnonzero(pending)
            if rows.size == 0:
                break
            Z = C.project(X[idx[rows]] - trial_eta[rows, None] * grad[rows])
            norms = np.linalg.norm(Z, axis=1)
            ok = norms > 0
            Z[ok] /= norms[ok, None]
            Pz, fz = _objective(A, D, Z)
            accept = ok & (fz <= previous[rows])
            target = idx[rows[accept]]
            X[target] = Z[accept]
            P[target] = Pz[accept]
            f[target] = fz[accept]
            pending[rows[accept]] = False
            trial_eta[rows[~accept]] *= 0.5
        eta[idx] = trial_eta
        decrease = previous - f[idx]
        done = pending | (decrease <= budget.rel_tol * previous) | (f[idx] <= floor)
        active[idx[done]] = False
        steps += 1
    return X, f, steps, bool(active.any())


def restricted_singular_value(A, C, D, budget=DEFAULT_BUDGET, stream=None, strict=False):
    """
    Smallest restricted singular value sigma_{C,D}(A) = min_{x in C, ||x||=1} ||P_D(Ax)||.

    Exact routes: a linear C whose image under A has a kernel gives 0, and a
    linear pair (C, D) gives sigma_min(Q_D^T A B_C) by SVD. Otherwise
    budget.search_samples random points of C on the sphere are evaluated and
    the best budget.restarts of them seed projected-gradient runs; the result
    is the smallest value seen, an upper bound on the true minimum.

    Args:
        A (array_like): n x m real matrix.
        C (Cone): Domain cone in R^m, not {0}.
        D (Cone): Target cone in R^n.
        budget (SolverBudget): Solver effort.
        stream (RngStream or Generator, optional): Randomness for the starts.
            Defaults to RngStream(0).
        strict (bool): Raise SolverStall instead of flagging it.

    Returns:
        SresResult: The value and its quality flags.

    Raises:
        SolverStall: In strict mode, when a restart exhausts max_steps or the
            restarts disagree.
    """
    A = as_matrix(A, dtype=float)
    _check_shapes(A, C, D)
    if _is_zero_cone(C):
        raise PreconditionViolated("the domain cone must not be {0}")
    scale = float(np.linalg.norm(A, 2))
    if scale == 0 or _is_zero_cone(D):
        return SresResult(0.0, exact=True)

    exact = _exact_sres(A, C, D, scale)
    if exact is not None:
        return SresResult(float(exact), exact=True)

    rng = as_generator(RngStream(0) if stream is None else stream)
    candidates = _sphere_points(C, max(budget.search_samples, budget.restarts), rng)
    if len(candidates) == 0:
        raise PreconditionViolated(f"could not sample unit vectors of {C.spec}")
    _, search_values = _objective(A, D, candidates)
    order = np.argsort(search_values, kind="stable")
    search_best = math.sqrt(2.0 * search_values[order[0]])

    starts = candidates[order[:budget.restarts]].copy()
    _, f, steps, exhausted = _descend(A, C, D, starts, budget, scale)
    values = np.sqrt(2.0 * f)
    best = float(min(np.min(values), search_best))
    agreeing = int(np.sum(values <= best + budget.report_tol * scale))
    stalled = exhausted or (budget.restarts > 1 and agreeing < 2)

    logger.debug(
        f"sres {C.spec} -> {D.spec}: {best:.6e} after {steps} steps, {agreeing}/{budget.restarts} agree"
    )
    if stalled and strict:
        if exhausted:
            raise SolverStall(f"restarts still descending after {budget.max_steps} steps at {best:.6e}")
        raise SolverStall(
            f"only {agreeing} of {budget.restarts} restarts reached {best:.6e} "
            f"within {budget.report_tol:.1e} * ||A||"
        )
    return SresResult(best, exact=False, stalled=stalled, agreeing=agreeing, restarts=budget.restarts, steps=steps)


def restricted_norm(A, C, D, budget=DEFAULT_BUDGET, stream=None):
    """
    Restricted norm max_{x in C, ||x||=1} ||P_D(Ax)||, a lower-bound estimate.

    Uses the ascent x <- P_C(g) / ||P_C(g)|| with g = A^T P_D(Ax), which never
    decreases the objective. Linear pairs are exact (largest singular value).
    """
    A = as_matrix(A, dtype=float)
    _check_shapes(A, C, D)
    B = _linear_basis(C)
    Q = _linear_basis(D)
    if B is not None and Q is not None:
        if B.shape[1] == 0 or Q.shape[1] == 0:
            return 0.0
        return svd_values(Q.T @ A @ B).spectral
    if _is_zero_cone(C):
        return 0.0

    rng = as_generator(RngStream(0) if stream is None else stream)
    X = _sphere_points(C, budget.restarts, rng)
    if len(X) == 0:
        return 0.0
    P, f = _objective(A, D, X)
    for _ in range(budget.max_steps):
        Z = C.project(P @ A)
        norms = np.linalg.norm(Z, axis=1)
        ok = norms > 0
        Z[ok] /= norms[ok, None]
        Z[~ok] = X[~ok]
        Pz, fz = _objective(A, D, Z)
        gain = fz - f
        better = gain > 0
        X[better], P[better], f[better] = Z[better], Pz[better], fz[better]
        if np.all(gain <= budget.rel_tol * np.maximum(f, SOLVER_FLOOR)):
            break
    return float(math.sqrt(2.0 * np.max(f)))


@dataclass
class BiconicProblem:
    """
    Biconic feasibility problem (A, C, D) with A in R^{n x m}, C in R^m, D in R^n.
    """

    A: np.ndarray
    C: Cone
    D: Cone

    def __post_init__(self):
        self.A = as_matrix(self.A, dtype=float)
        _check_shapes(self.A, self.C, self.D)

    @classmethod
    def from_specs(cls, A, c_spec, d_spec):
        return cls(A, parse_cone(c_spec), parse_cone(d_spec))

    @property
    def shape(self):
        return self.A.shape

    @property
    def norm(self):
        return float(np.linalg.norm(self.A, 2))

    def dual(self):
        """The exchanged problem (-A^T, D, C)."""
        return BiconicProblem(-self.A.T, self.D, self.C)


class Feasibility(str, Enum):
    PRIMAL = "Primal"
    DUAL = "Dual"
    ILL_POSED = "IllPosed"
    # both restricted singular values above the tolerance
    INDETERMINATE = "Indeterminate"


@dataclass
class FeasibilityVerdict:
    """
    Feasibility classification with both restricted singular values.

    sres_primal is the distance of A to the primal-feasible instances and
    sres_dual the distance to the dual-feasible ones.
    """

    tag: Feasibility
    sres_primal: float
    sres_dual: float
    tolerance: float
    norm: float
    stalled: bool = False

    @property
    def dist_to_primal(self):
        return self.sres_primal

    @property
    def dist_to_dual(self):
        return self.sres_dual

    @property
    def condition(self):
        """min(||A|| / sres_primal, ||A|| / sres_dual); infinite when ill-posed."""
        if self.tag is Feasibility.ILL_POSED:
            return math.inf
        return self.norm / max(self.sres_primal, self.sres_dual)


def classify_feasibility(problem, tol=None, budget=DEFAULT_BUDGET, stream=None, strict=False):
    """
    Decide which of the primal and dual problems is feasible.

    Args:
        problem (BiconicProblem): The instance.
        tol (float, optional): Zero tolerance; defaults to 1e-8 * ||A||.
        budget (SolverBudget): Solver effort for each side.
        stream (RngStream, optional): The primal side uses stream.spawn(0),
            the dual side stream.spawn(1).
        strict (bool): Propagate SolverStall.

    Returns:
        FeasibilityVerdict: Primal when only sres_primal <= tol, Dual when only
        sres_dual <= tol, IllPosed when both are, Indeterminate otherwise.
    """
    if tol is not None and tol <= 0:
        raise PreconditionViolated(f"tolerance must be positive, got {tol}")
    norm = problem.norm
    tol = ZERO_TOL * norm if tol is None else tol
    stream = RngStream(0) if stream is None else stream

    primal = restricted_singular_value(problem.A, problem.C, problem.D, budget, stream.spawn(0), strict)
    dual = restricted_singular_value(-problem.A.T, problem.D, problem.C, budget, stream.spawn(1), strict)
    p, d = primal.value, dual.value

    if p <= tol and d <= tol:
        tag = Feasibility.ILL_POSED
    elif p <= tol:
        tag = Feasibility.PRIMAL
    elif d <= tol:
        tag = Feasibility.DUAL
    else:
        tag = Feasibility.INDETERMINATE
    return FeasibilityVerdict(tag, p, d, tol, norm, stalled=primal.stalled or dual.stalled)


def renegar_condition(problem, budget=DEFAULT_BUDGET, stream=None, strict=False):
    """
    Renegar's condition number min(||A|| / sigma_{C,D}(A), ||A|| / sigma_{D,C}(-A^T)).

    Uses the spectral norm. Returns math.inf on ill-posed instances.

    Raises:
        PreconditionViolated: If A is zero.
    """
    if problem.norm == 0:
        raise PreconditionViolated("Renegar's condition number needs A != 0")
    return classify_feasibility(problem, budget=budget, stream=stream, strict=strict).condition


class ConeWidths(NamedTuple):
    w_c: float
    w_d: float
    w_rm: float
    w_rn: float


def _width(cone, trials, stream):
    exact = cone.closed_form_width()
    if exact is not None:
        return exact
    geometry = cone_geometry(cone, trials, stream)
    delta = cone.closed_form_dimension()
    if delta is not None:
        slack = 3.0 * geometry.squared_width_se
        w2 = geometry.gaussian_width ** 2
        if not delta - 1.0 - slack <= w2 <= delta + slack:
            logger.warning(f"width estimate of {cone.spec} leaves [delta - 1, delta]: w^2={w2:.4f}, delta={delta}")
    return geometry.gaussian_width


def cone_widths(C, D, trials=100_000, stream=None):
    """
    Gaussian widths (w(C), w(D), w(R^m), w(R^n)).

    Closed forms where known (linear cones), Monte Carlo otherwise; C uses
    stream.spawn(0) and D stream.spawn(1).
    """
    stream = RngStream(0) if stream is None else stream
    return ConeWidths(
        _width(C, trials, stream.spawn(0)),
        _width(D, trials, stream.spawn(1)),
        chi_mean(C.ambient_dim),
        chi_mean(D.ambient_dim),
    )


class GordonBounds(NamedTuple):
    upper_threshold: float
    lower_threshold: float
    prob_bound: float


def gordon_bounds(C, D, lam, widths=None, trials=100_000, stream=None):
    """
    Gordon thresholds for a Gaussian G: P{||G||_{C->D} >= w(C) + w(D) + lam} and
    P{sigma_{C,D}(G) <= w(D) - w(C) - lam} are each at most exp(-lam^2 / 2).

    Args:
        C (Cone): Domain cone.
        D (Cone): Target cone.
        lam (float): Deviation, nonnegative.
        widths (ConeWidths, optional): Widths to use; estimated when missing.
    """
    if lam < 0:
        raise PreconditionViolated(f"lambda must be nonnegative, got {lam}")
    if widths is None:
        widths = cone_widths(C, D, trials, stream)
    return GordonBounds(
        widths.w_c + widths.w_d + lam,
        widths.w_d - widths.w_c - lam,
        math.exp(-lam * lam / 2.0),
    )


class GordonPoint(NamedTuple):
    lam: float
    lower_threshold: float
    lower_empirical: float
    lower_se: float
    upper_threshold: float
    upper_empirical: float
    upper_se: float
    prob_bound: float

    def holds(self, k=3.0):
        return (
            self.lower_empirical <= self.prob_bound + k * self.lower_se
            and self.upper_empirical <= self.prob_bound + k * self.upper_se
        )


def _gordon_trial(C, D, budget, stream):
    rng = as_generator(stream.spawn(0))
    n, m = D.ambient_dim, C.ambient_dim
    G = gaussian_matrix(rng, n, m)
    low = restricted_singular_value(G, C, D, budget, stream.spawn(1))
    high = restricted_norm(G, C, D, budget, stream.spawn(2))
    return low.value, high


def _proportion(events):
    p = float(np.mean(events))
    return p, math.sqrt(max(p * (1.0 - p), 1.0 / len(events)) / len(events))


def gordon_experiment(
    C, D, lambdas, trials, stream, budget=GORDON_BUDGET, widths=None, width_trials=100_000, mapper=map
):
    """
    Empirical frequencies of both Gordon events against exp(-lam^2 / 2).

    Trial i uses stream.spawn(0).spawn(i); widths come from stream.spawn(1)
    when not supplied.

    Returns:
        List[GordonPoint]: One point per lambda.
    """
    if trials < 100:
        raise PreconditionViolated(f"trials must be >= 100, got {trials}")
    if widths is None:
        widths = cone_widths(C, D, width_trials, stream.spawn(1))
    logger.info(f"Gordon experiment: C={C.spec}, D={D.spec}, trials={trials}")
    trial_streams = stream.spawn(0)
    outcomes = list(mapper(partial(_gordon_trial, C, D, budget), [trial_streams.spawn(i) for i in range(trials)]))
    lows = np.array([o[0] for o in outcomes])
    highs = np.array([o[1] for o in outcomes])

    points = []
    for lam in lambdas:
        bounds = gordon_bounds(C, D, lam, widths)
        lower_p, lower_se = _proportion(lows <= bounds.lower_threshold)
        upper_p, upper_se = _proportion(highs >= bounds.upper_threshold)
        point = GordonPoint(
            float(lam), bounds.lower_threshold, lower_p, lower_se,
            bounds.upper_threshold, upper_p, upper_se, bounds.prob_bound,
        )
        if not point.holds():
            logger.warning(f"Gordon bound exceeded at lambda={lam}: {point}")
        points.append(point)
    return points


@dataclass
class KeyboundParams:
    """
    Parameters of the conditional-expectation bound for Renegar's condition.

    Attributes:
        a (float): (w(R^m) + w(R^n) + w(D) - w(C)) / 2.
        b (float): (w(R^m) + w(R^n) - w(D) + w(C)) / 2.
        epsilon (float): Exceptional-set measure 2 exp(-(a - b)^2 / 8).
        t_epsilon (float): Exceptional-set threshold 2(a + b)/(a - b) + 1.
        integral (float): Integral of exp(-(as - b)^2 / 2) / (1 - s)^2 over [b/a, (a+b)/(2a)].
        rhs (float): (1 / (1 - epsilon)) ((a + b)/(a - b) + 4 * integral).
        integral_error (float): Quadrature error estimate.
    """

    a: float
    b: float
    epsilon: float
    t_epsilon: float
    integral: float
    rhs: float
    integral_error: float = 0.0

    @property
    def limits(self):
        return self.b / self.a, (self.a + self.b) / (2.0 * self.a)


def _keybound_integrand(a, b, s):
    return np.exp(-0.5 * (a * s - b) ** 2) / (1.0 - s) ** 2


def keybound(C=None, D=None, widths=None, trials=100_000, stream=None):
    """
    Bound on E[R_{C,D}(G) | G not in E] for a Gaussian G outside an exceptional set E.

    Args:
        C (Cone, optional): Domain cone; only needed when widths are estimated.
        D (Cone, optional): Target cone.
        widths (ConeWidths or tuple, optional): (w(C), w(D), w(R^m), w(R^n)).
        trials (int): Monte Carlo samples for width estimates.
        stream (RngStream, optional): Randomness for width estimates.

    Returns:
        KeyboundParams: a, b, epsilon, t_epsilon and the right-hand side, with
        the integral evaluated by adaptive quadrature to absolute error 1e-10.

    Raises:
        PreconditionViolated: If w(D) - w(C) <= 2 sqrt(2).
    """
    if widths is None:
        if C is None or D is None:
            raise PreconditionViolated("keybound needs either cones or widths")
        widths = cone_widths(C, D, trials, stream)
    w_c, w_d, w_rm, w_rn = widths
    gap = w_d - w_c
    if gap <= KEYBOUND_GAP:
        raise PreconditionViolated(f"width gap w(D) - w(C) = {gap:.4f} must exceed 2 sqrt(2)")

    a = 0.5 * (w_rm + w_rn + gap)
    b = 0.5 * (w_rm + w_rn - gap)
    epsilon = 2.0 * math.exp(-gap * gap / 8.0)
    low, high = b / a, (a + b) / (2.0 * a)
    integral, error = integrate.quad(
        partial(_keybound_integrand, a, b), low, high, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200
    )
    rhs = ((w_rm + w_rn) / gap + 4.0 * integral) / (1.0 - epsilon)
    return KeyboundParams(a, b, epsilon, 2.0 * (a + b) / gap + 1.0, float(integral), float(rhs), float(error))


def keybound_integral_trapezoid(a, b, points=1_000_000):
    """Trapezoid-rule oracle for the keybound integral."""
    s = np.linspace(b / a, (a + b) / (2.0 * a), points)
    return float(integrate.trapezoid(_keybound_integrand(a, b, s), s))


def _check_regime(alpha, beta, gamma):
    for name, value in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
        if not 0 < value <= 1:
            raise PreconditionViolated(f"{name} must lie in (0, 1], got {value}")
    if beta <= alpha * gamma:
        raise PreconditionViolated(f"need beta > alpha * gamma, got {beta} <= {alpha * gamma}")


def asymptotic_limit(alpha, beta, gamma):
    """Limit (1 + gamma) / (beta - alpha gamma) of the weak expectation of R along a regime."""
    _check_regime(alpha, beta, gamma)
    return (1.0 + gamma) / (beta - alpha * gamma)


def laplace_integral(n, alpha, beta, gamma):
    """
    R(n) = integral over [0, u] of (1 - s)^-2 exp(-n (cs - d)^2 / 8) ds.

    c = gamma + 1 + beta - alpha gamma, d = gamma + 1 - (beta - alpha gamma) and
    u = (1 + gamma) / (1 + gamma + beta - alpha gamma). R(n) sqrt(n) stays bounded.
    """
    _check_regime(alpha, beta, gamma)
    c = gamma + 1.0 + beta - alpha * gamma
    d = gamma + 1.0 - (beta - alpha * gamma)
    u = (1.0 + gamma) / c

    def integrand(s):
        return math.exp(-n * (c * s - d) ** 2 / 8.0) / (1.0 - s) ** 2

    value, _ = integrate.quad(integrand, 0.0, u, points=[d / c], epsabs=0.0, epsrel=1e-10, limit=400)
    return float(value)


@dataclass
class AsymptoticRegime:
    """
    A family of cone pairs (C_k, D_k) with delta(C_k)/m_k -> alpha^2,
    delta(D_k)/n_k -> beta^2 and m_k/n_k -> gamma^2.

    The schedule is n_k = n0 2^k, m_k = round(gamma^2 n_k); the cones are the
    templates rescaled with Cone.with_dimension.
    """

    alpha: float
    beta: float
    gamma: float
    n0: int
    cone_c: Cone
    cone_d: Cone

    def __post_init__(self):
        _check_regime(self.alpha, self.beta, self.gamma)
        if self.n0 < 1:
            raise PreconditionViolated(f"n0 must be >= 1, got {self.n0}")

    @classmethod
    def from_cones(cls, C, D):
        """Read (alpha, beta, gamma) off closed-form statistical dimensions; k = 0 reproduces (C, D)."""
        m, n = C.ambient_dim, D.ambient_dim
        delta_c = C.closed_form_dimension()
        delta_d = D.closed_form_dimension()
        if delta_c is None or delta_d is None:
            raise PreconditionViolated(f"no closed-form statistical dimension for {C.spec} or {D.spec}")
        return cls(math.sqrt(delta_c / m), math.sqrt(delta_d / n), math.sqrt(m / n), n, C, D)

    @property
    def limit(self):
        return asymptotic_limit(self.alpha, self.beta, self.gamma)

    def dimensions(self, k):
        n = self.n0 * 2 ** k
        return max(1, round(self.gamma ** 2 * n)), n

    def cones(self, k):
        m, n = self.dimensions(k)
        if k == 0:
            return self.cone_c, self.cone_d
        return self.cone_c.with_dimension(m), self.cone_d.with_dimension(n)


class TrialRecord(NamedTuple):
    k: int
    m: int
    n: int
    condition: float
    sres_primal: float
    sres_dual: float
    verdict: str
    stalled: bool


@dataclass
class RenegarWeakResult:
    k: int
    m: int
    n: int
    weak: WeakExpectationReport
    keybound: Optional[KeyboundParams]
    limit: float
    records: List[TrialRecord] = field(repr=False, default_factory=list)

    @property
    def rhs(self):
        return self.keybound.rhs if self.keybound is not None else math.nan

    @property
    def stalled_count(self):
        return sum(1 for r in self.records if r.stalled)

    def within_keybound(self, k=3.0):
        """Conditional mean <= rhs + k SE; None when the bound does not apply."""
        if self.keybound is None:
            return None
        return self.weak.conditional_mean <= self.rhs + k * self.weak.conditional_se


def _renegar_trial(k, C, D, budget, strict, stream):
    m, n = C.ambient_dim, D.ambient_dim
    G = gaussian_matrix(stream.spawn(0), n, m)
    verdict = classify_feasibility(BiconicProblem(G, C, D), budget=budget, stream=stream.spawn(1), strict=strict)
    return TrialRecord(
        k, m, n, verdict.condition, verdict.sres_primal, verdict.sres_dual, verdict.tag.value, verdict.stalled
    )


def renegar_weak_experiment(
    regime,
    k,
    epsilon,
    trials,
    budget=DEFAULT_BUDGET,
    stream=None,
    width_trials=100_000,
    strict=False,
    mapper=map,
):
    """
    Weak average of Renegar's condition number for Gaussian matrices at schedule point k.

    Args:
        regime (AsymptoticRegime): Cone family and dimension schedule.
        k (int): Schedule index.
        epsilon (float): Exceptional fraction.
        trials (int): Gaussian matrices, at least 100.
        budget (SolverBudget): Solver effort per restricted singular value.
        stream (RngStream): Trial i uses stream.spawn(0).spawn(i); the width
            estimates use stream.spawn(1).
        width_trials (int): Monte Carlo samples per width estimate.
        strict (bool): Propagate SolverStall.
        mapper (callable): map-like function; results are consumed in trial order.

    Returns:
        RenegarWeakResult: The weak report next to the keybound right-hand side
        (None when its width precondition fails) and the asymptotic limit.
    """
    if trials < 100:
        raise PreconditionViolated(f"trials must be >= 100, got {trials}")
    stream = RngStream(0) if stream is None else stream
    C, D = regime.cones(k)
    m, n = C.ambient_dim, D.ambient_dim
    logger.info(f"Renegar experiment: k={k}, C={C.spec}, D={D.spec}, trials={trials}")

    trial_streams = stream.spawn(0)
    records = list(
        mapper(partial(_renegar_trial, k, C, D, budget, strict), [trial_streams.spawn(i) for i in range(trials)])
    )
    weak = weak_expectation([r.condition for r in records], epsilon)

    widths = cone_widths(C, D, width_trials, stream.spawn(1))
    try:
        bound = keybound(widths=widths)
    except PreconditionViolated as e:
        logger.warning(f"keybound does not apply at k={k}: {e}")
        bound = None

    result = RenegarWeakResult(k, m, n, weak, bound, regime.limit, records)
    if result.stalled_count:
        logger.warning(f"{result.stalled_count} of {trials} trials had stalled solver restarts")
    logger.info(f"k={k}: conditional mean {weak.conditional_mean:.4f}, rhs {result.rhs:.4f}, limit {result.limit:.4f}")
    return result
