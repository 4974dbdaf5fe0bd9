#!/usr/bin/env python3
"""
Tests for restricted singular values, feasibility verdicts, Renegar's
condition number, Gordon's bounds, the keybound and the asymptotic regime.
"""

import math
import unittest
import sys
from pathlib import Path

import numpy as np

# Add the parent directory to the path so we can import the module
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from wacc.cones import FullSpace, Orthant, SecondOrder, Subspace, chi_mean
from wacc.errors import DimensionMismatch, PreconditionViolated, SolverStall
from wacc.renegar import (
    AsymptoticRegime,
    BiconicProblem,
    ConeWidths,
    Feasibility,
    SolverBudget,
    asymptotic_limit,
    classify_feasibility,
    cone_widths,
    gordon_bounds,
    gordon_experiment,
    keybound,
    keybound_integral_trapezoid,
    laplace_integral,
    renegar_condition,
    renegar_weak_experiment,
    restricted_norm,
    restricted_singular_value,
)
from wacc.sampling import RngStream, gaussian_matrix

LIGHT_BUDGET = SolverBudget(restarts=8, max_steps=500, search_samples=256)


class TestRestrictedSingularValue(unittest.TestCase):
    """Test cases for sigma_{C,D}(A)"""

    def test_linear_pair_is_exact(self):
        result = restricted_singular_value(np.diag([1.0, 2.0]), FullSpace(2), FullSpace(2))
        self.assertTrue(result.exact)
        self.assertAlmostEqual(result.value, 1.0)

    def test_kernel_gives_zero(self):
        result = restricted_singular_value(np.ones((2, 3)), FullSpace(3), Orthant(2))
        self.assertTrue(result.exact)
        self.assertEqual(result.value, 0.0)

    def test_orthant_domain(self):
        self.assertAlmostEqual(float(restricted_singular_value(np.eye(2), Orthant(2), FullSpace(2))), 1.0, places=8)
        result = restricted_singular_value(np.diag([1.0, 2.0]), Orthant(2), FullSpace(2), stream=RngStream(3))
        self.assertFalse(result.exact)
        self.assertAlmostEqual(result.value, 1.0, places=6)
        self.assertFalse(result.stalled)

    def test_orthant_pair(self):
        """-I maps the orthant into the polar of the orthant"""
        self.assertLess(restricted_singular_value(-np.eye(2), Orthant(2), Orthant(2)).value, 1e-10)
        self.assertAlmostEqual(restricted_singular_value(np.eye(2), Orthant(2), Orthant(2)).value, 1.0, places=6)

    def test_zero_cases(self):
        self.assertEqual(restricted_singular_value(np.zeros((2, 2)), Orthant(2), Orthant(2)).value, 0.0)
        self.assertEqual(restricted_singular_value(np.eye(2), Orthant(2), Subspace.zero(2)).value, 0.0)
        with self.assertRaises(PreconditionViolated):
            restricted_singular_value(np.eye(2), Subspace.zero(2), FullSpace(2))

    def test_shape_checks(self):
        with self.assertRaises(DimensionMismatch):
            restricted_singular_value(np.ones((2, 3)), FullSpace(2), FullSpace(2))

    def test_stall_flag_and_strict_mode(self):
        """A single restart cut off after one step reports a stall"""
        A = np.diag([1.0, 1.001, 1.002])
        budget = SolverBudget(restarts=1, max_steps=1, search_samples=8)
        result = restricted_singular_value(A, Orthant(3), FullSpace(3), budget, RngStream(1))
        self.assertFalse(result.exact)
        self.assertTrue(result.stalled)
        self.assertEqual(result.steps, 1)
        self.assertGreaterEqual(result.value, 1.0 - 1e-12)
        with self.assertRaises(SolverStall):
            restricted_singular_value(A, Orthant(3), FullSpace(3), budget, RngStream(1), strict=True)

    def test_converged_run_is_not_stalled(self):
        """A budget large enough to converge clears the stall flag"""
        A = np.diag([1.0, 1.001, 1.002])
        budget = SolverBudget(restarts=1, max_steps=10_000, search_samples=8)
        result = restricted_singular_value(A, Orthant(3), FullSpace(3), budget, RngStream(1))
        self.assertFalse(result.stalled)
        self.assertAlmostEqual(result.value, 1.0, places=4)

    def test_solver_beats_random_search(self):
        """The solver value is never above the best of 10^5 random unit points of C"""
        cases = ((Orthant(3), FullSpace(4)), (Orthant(3), Orthant(4)), (SecondOrder(3), FullSpace(4)))
        for i, (C, D) in enumerate(cases):
            A = gaussian_matrix(RngStream(50, i), 4, 3)
            points = C.project(RngStream(51, i).generator().standard_normal((100_000, 3)))
            norms = np.linalg.norm(points, axis=1)
            points = points[norms > 0] / norms[norms > 0, None]
            brute = float(np.min(np.linalg.norm(D.project(points @ A.T), axis=1)))
            solver = restricted_singular_value(A, C, D, stream=RngStream(52, i)).value
            self.assertLessEqual(solver, brute + 1e-9, C.spec + " -> " + D.spec)

    def test_budget_validation(self):
        with self.assertRaises(PreconditionViolated):
            SolverBudget(restarts=0)

    def test_restricted_norm(self):
        self.assertAlmostEqual(restricted_norm(np.diag([1.0, 2.0]), FullSpace(2), FullSpace(2)), 2.0)
        self.assertAlmostEqual(restricted_norm(np.diag([1.0, 2.0]), Orthant(2), FullSpace(2)), 2.0, places=6)
        self.assertAlmostEqual(restricted_norm(-np.eye(2), Orthant(2), Orthant(2)), 0.0)


class TestFeasibility(unittest.TestCase):
    """Test cases for verdicts and Renegar's condition number"""

    def test_primal_and_dual(self):
        primal = classify_feasibility(BiconicProblem(-np.eye(2), Orthant(2), Orthant(2)))
        self.assertIs(primal.tag, Feasibility.PRIMAL)
        self.assertAlmostEqual(primal.sres_dual, 1.0, places=6)
        self.assertAlmostEqual(primal.condition, 1.0, places=6)

        dual = classify_feasibility(BiconicProblem(np.eye(2), Orthant(2), Orthant(2)))
        self.assertIs(dual.tag, Feasibility.DUAL)
        self.assertEqual(dual.tag.value, "Dual")

    def test_ill_posed(self):
        verdict = classify_feasibility(BiconicProblem(np.diag([1.0, 0.0]), FullSpace(2), FullSpace(2)))
        self.assertIs(verdict.tag, Feasibility.ILL_POSED)
        self.assertEqual(verdict.condition, math.inf)

    def test_full_space_condition(self):
        problem = BiconicProblem.from_specs(np.diag([1.0, 2.0]), "full:2", "full:2")
        self.assertAlmostEqual(renegar_condition(problem), 2.0)
        self.assertIs(classify_feasibility(problem).tag, Feasibility.INDETERMINATE)

    def test_classical_condition_number(self):
        """With C and D full spaces R equals sigma_max / sigma_min of a wide matrix"""
        A = gaussian_matrix(RngStream(12), 20, 50)
        values = np.linalg.svd(A, compute_uv=False)
        problem = BiconicProblem(A, FullSpace(50), FullSpace(20))
        self.assertAlmostEqual(renegar_condition(problem), values[0] / values[-1], places=8)
        self.assertIs(classify_feasibility(problem).tag, Feasibility.PRIMAL)

    def test_scale_invariance(self):
        A = gaussian_matrix(RngStream(13), 5, 3)
        problem = BiconicProblem(A, Orthant(3), FullSpace(5))
        scaled = BiconicProblem(7.5 * A, Orthant(3), FullSpace(5))
        r1 = renegar_condition(problem, stream=RngStream(1))
        r2 = renegar_condition(scaled, stream=RngStream(1))
        self.assertAlmostEqual(r1 / r2, 1.0, places=5)

    def test_exchange_swaps_sides(self):
        A = gaussian_matrix(RngStream(14), 5, 3)
        problem = BiconicProblem(A, Orthant(3), FullSpace(5))
        verdict = classify_feasibility(problem, stream=RngStream(2))
        exchanged = classify_feasibility(problem.dual(), stream=RngStream(2))
        self.assertAlmostEqual(verdict.sres_primal, exchanged.sres_dual, places=6)
        self.assertAlmostEqual(verdict.sres_dual, exchanged.sres_primal, places=6)
        self.assertIs(verdict.tag, Feasibility.DUAL)
        self.assertIs(exchanged.tag, Feasibility.PRIMAL)
        self.assertAlmostEqual(verdict.condition, exchanged.condition, places=5)

    def test_zero_matrix(self):
        with self.assertRaises(PreconditionViolated):
            renegar_condition(BiconicProblem(np.zeros((2, 2)), FullSpace(2), FullSpace(2)))

    def test_bad_tolerance(self):
        with self.assertRaises(PreconditionViolated):
            classify_feasibility(BiconicProblem(np.eye(2), FullSpace(2), FullSpace(2)), tol=0.0)


class TestKeybound(unittest.TestCase):
    """Test cases for the conditional-expectation bound"""

    WIDTHS = ConeWidths(0.0, 10.0, 8.0, 12.0)

    def test_parameters(self):
        params = keybound(widths=self.WIDTHS)
        self.assertAlmostEqual(params.a, 15.0)
        self.assertAlmostEqual(params.b, 5.0)
        self.assertAlmostEqual(params.epsilon, 2.0 * math.exp(-12.5))
        self.assertAlmostEqual(params.t_epsilon, 5.0)
        low, high = params.limits
        self.assertAlmostEqual(low, 1.0 / 3.0)
        self.assertAlmostEqual(high, 2.0 / 3.0)
        self.assertAlmostEqual(params.rhs, (2.0 + 4.0 * params.integral) / (1.0 - params.epsilon))

    def test_quadrature_matches_trapezoid(self):
        params = keybound(widths=self.WIDTHS)
        self.assertAlmostEqual(params.integral, keybound_integral_trapezoid(params.a, params.b), delta=1e-8)
        self.assertLess(params.integral_error, 1e-9)

    def test_gap_precondition(self):
        with self.assertRaises(PreconditionViolated):
            keybound(widths=(0.0, 2.0, 8.0, 12.0))
        with self.assertRaises(PreconditionViolated):
            keybound()

    def test_widths_of_linear_cones(self):
        widths = cone_widths(FullSpace(25), FullSpace(100))
        self.assertEqual(widths, ConeWidths(chi_mean(25), chi_mean(100), chi_mean(25), chi_mean(100)))
        params = keybound(FullSpace(25), FullSpace(100))
        self.assertGreater(params.rhs, 1.0)

    def test_monte_carlo_widths(self):
        widths = cone_widths(Orthant(10), FullSpace(40), trials=20_000, stream=RngStream(6))
        # w(orthant)^2 lies in [delta - 1, delta] with delta = 5
        self.assertTrue(4.0 - 0.1 <= widths.w_c ** 2 <= 5.0 + 0.1)


class TestGordon(unittest.TestCase):
    def test_thresholds(self):
        widths = ConeWidths(2.0, 9.0, 2.0, 9.0)
        bounds = gordon_bounds(FullSpace(4), FullSpace(81), 2.0, widths)
        self.assertAlmostEqual(bounds.prob_bound, math.exp(-2.0))
        self.assertAlmostEqual(bounds.upper_threshold, 13.0)
        self.assertAlmostEqual(bounds.lower_threshold, 5.0)
        with self.assertRaises(PreconditionViolated):
            gordon_bounds(FullSpace(4), FullSpace(81), -1.0, widths)

    def test_experiment_respects_bound(self):
        points = gordon_experiment(FullSpace(3), FullSpace(10), [0.5, 1.0, 2.0], 400, RngStream(5))
        self.assertEqual([p.lam for p in points], [0.5, 1.0, 2.0])
        for point in points:
            self.assertTrue(point.holds(), point)


class TestAsymptotics(unittest.TestCase):
    """Test cases for the limit, the Laplace scaling and the regime schedule"""

    def test_limit(self):
        self.assertAlmostEqual(asymptotic_limit(1 / math.sqrt(2), 1.0, 0.5), 2.3204, places=3)
        with self.assertRaises(PreconditionViolated):
            asymptotic_limit(1.0, 0.5, 0.5)
        with self.assertRaises(PreconditionViolated):
            asymptotic_limit(0.5, 1.5, 0.5)

    def test_laplace_scaling(self):
        """sqrt(n) R(n) settles down as n grows"""
        args = (1 / math.sqrt(2), 1.0, 0.5)
        scaled = [laplace_integral(n, *args) * math.sqrt(n) for n in (1000, 10_000)]
        self.assertTrue(0.5 <= scaled[1] / scaled[0] <= 2.0)
        self.assertGreater(laplace_integral(100, *args), laplace_integral(1000, *args))

    def test_regime_from_cones(self):
        regime = AsymptoticRegime.from_cones(Orthant(50), FullSpace(200))
        self.assertAlmostEqual(regime.alpha, 1 / math.sqrt(2))
        self.assertAlmostEqual(regime.beta, 1.0)
        self.assertAlmostEqual(regime.gamma, 0.5)
        self.assertAlmostEqual(regime.limit, 2.3204, places=3)
        self.assertEqual(regime.dimensions(0), (50, 200))
        self.assertEqual(regime.dimensions(1), (100, 400))
        self.assertEqual(regime.cones(0), (Orthant(50), FullSpace(200)))
        self.assertEqual(regime.cones(1), (Orthant(100), FullSpace(400)))


class TestRenegarWeakExperiment(unittest.TestCase):
    def test_small_run(self):
        regime = AsymptoticRegime.from_cones(Orthant(4), FullSpace(8))
        args = (regime, 0, 0.01, 100, LIGHT_BUDGET, RngStream(40))
        result = renegar_weak_experiment(*args, width_trials=1000)
        self.assertEqual((result.m, result.n), (4, 8))
        self.assertEqual(len(result.records), 100)
        # the dual side has a kernel, so every instance is dual feasible
        self.assertTrue(all(r.verdict == "Dual" for r in result.records))
        self.assertEqual(result.weak.exceptional_count, 1)
        self.assertAlmostEqual(result.limit, regime.limit)
        # w(R^8) - w(orthant:4) is below 2 sqrt(2)
        self.assertIsNone(result.keybound)
        self.assertIsNone(result.within_keybound())

        again = renegar_weak_experiment(*args, width_trials=1000)
        self.assertEqual(result.weak.conditional_mean, again.weak.conditional_mean)

    def test_needs_enough_trials(self):
        regime = AsymptoticRegime.from_cones(Orthant(4), FullSpace(8))
        with self.assertRaises(PreconditionViolated):
            renegar_weak_experiment(regime, 0, 0.01, 50, LIGHT_BUDGET, RngStream(0))


if __name__ == "__main__":
    unittest.main()
